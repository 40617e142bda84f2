#pragma once

#include "sdpc/matrix.hpp"

namespace sdpc {

/// Thin SVD a = u * diag(singular_values) * v^T with singular values sorted
/// descending. u is rows x min(rows,cols), v is cols x min(rows,cols).
struct SvdFactorization {
    Matrix u;
    Vector singular_values;
    Matrix v;
};

/// One-sided Jacobi SVD. Intended for the small dense matrices that occur
/// here (at most a few hundred rows); accurate to ~1e-14 relative.
SvdFactorization jacobi_svd(const Matrix& a);

/// Moore-Penrose inverse. Singular values below tol * sigma_max are zeroed.
Matrix pseudo_inverse(const Matrix& m, double tol = 1e-12);

/// Number of singular values above tol * sigma_max.
std::size_t numerical_rank(const Matrix& m, double tol = 1e-12);

}  // namespace sdpc
