#include "sdpc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace sdpc {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw InvalidInput("from_rows: ragged rows");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::from_columns(const std::vector<Vector>& columns) {
    const std::size_t c = columns.size();
    const std::size_t r = c == 0 ? 0 : columns.front().size();
    Matrix m(r, c);
    for (std::size_t j = 0; j < c; ++j) {
        if (columns[j].size() != r) throw InvalidInput("from_columns: ragged columns");
        for (std::size_t i = 0; i < r; ++i) m(i, j) = columns[j][i];
    }
    return m;
}

Vector Matrix::row(std::size_t i) const {
    Vector v(cols_);
    for (std::size_t j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
    return v;
}

Vector Matrix::column(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_row(std::size_t i, const Vector& v) {
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
}

void Matrix::set_column(std::size_t j, const Vector& v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::row_block(std::size_t r0, std::size_t n) const {
    Matrix m(n, cols_);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(r0 + i, j);
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double s = 0.0;
    for (double v : data_) s = std::max(s, std::abs(v));
    return s;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("matrix add: shape mismatch");
    Matrix m(a.rows(), a.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i) m.data()[i] = a.data()[i] + b.data()[i];
    return m;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("matrix sub: shape mismatch");
    Matrix m(a.rows(), a.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i) m.data()[i] = a.data()[i] - b.data()[i];
    return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidInput("matrix mul: shape mismatch");
    Matrix m(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) m(i, j) += aik * b(k, j);
        }
    }
    return m;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix m = a;
    for (double& v : m.data()) v *= s;
    return m;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw InvalidInput("matvec: shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix m(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(j, i) = a(i, j);
    return m;
}

Vector vadd(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("vadd: size mismatch");
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] + b[i];
    return v;
}

Vector vsub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("vsub: size mismatch");
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] - b[i];
    return v;
}

Vector vscale(double s, const Vector& a) {
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = s * a[i];
    return v;
}

void vaxpy(double s, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw InvalidInput("vaxpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

bool all_finite(const Vector& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

Vector concat(const Vector& a, const Vector& b) {
    Vector v = a;
    v.insert(v.end(), b.begin(), b.end());
    return v;
}

Vector lu_solve(const Matrix& a, const Vector& b, double tol) {
    if (a.rows() != a.cols()) throw InvalidInput("lu_solve: matrix not square");
    if (a.rows() != b.size()) throw InvalidInput("lu_solve: rhs size mismatch");
    const std::size_t n = a.rows();
    Matrix lu = a;
    Vector x = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    const double pivot_floor = tol * std::max(1.0, lu.max_abs());

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(lu(i, k)) > best) {
                best = std::abs(lu(i, k));
                piv = i;
            }
        }
        if (best <= pivot_floor) throw DegenerateConstraints("lu_solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            std::swap(x[k], x[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            lu(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t ik = n; ik-- > 0;) {
        double s = x[ik];
        for (std::size_t j = ik + 1; j < n; ++j) s -= lu(ik, j) * x[j];
        x[ik] = s / lu(ik, ik);
    }
    return x;
}

std::optional<Matrix> cholesky_factor(const Matrix& a) {
    if (a.rows() != a.cols()) return std::nullopt;
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0 || !std::isfinite(d)) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
        y[ii] = s / l(ii, ii);
    }
    return y;
}

}  // namespace sdpc
