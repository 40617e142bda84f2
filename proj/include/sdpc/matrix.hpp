#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

#include "sdpc/errors.hpp"

namespace sdpc {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. All paper-side objects (Hankel blocks,
/// Koopman matrices, weighting matrices, Gram matrices) live in this container.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix from_columns(const std::vector<Vector>& columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vector row(std::size_t i) const;
    Vector column(std::size_t j) const;
    void set_row(std::size_t i, const Vector& v);
    void set_column(std::size_t j, const Vector& v);

    /// Copies rows [r0, r0+n) into a new matrix.
    Matrix row_block(std::size_t r0, std::size_t n) const;

    bool all_finite() const;
    double frobenius_norm() const;
    double max_abs() const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, const Vector& x);
Matrix transpose(const Matrix& a);

// Vector helpers. Kept as named functions; everything is plain std::vector<double>.
Vector vadd(const Vector& a, const Vector& b);
Vector vsub(const Vector& a, const Vector& b);
Vector vscale(double s, const Vector& a);
void vaxpy(double s, const Vector& x, Vector& y);  // y += s*x
double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double norm_inf(const Vector& a);
bool all_finite(const Vector& a);
Vector concat(const Vector& a, const Vector& b);

/// Solves A x = b by LU with partial pivoting. Throws DegenerateConstraints
/// when a pivot falls below tol * max|A|.
Vector lu_solve(const Matrix& a, const Vector& b, double tol = 1e-13);

/// Cholesky factor L with A = L L^T, or nullopt if A is not positive definite.
std::optional<Matrix> cholesky_factor(const Matrix& a);

/// Solves A x = b given the Cholesky factor L of A.
Vector cholesky_solve(const Matrix& l, const Vector& b);

}  // namespace sdpc
