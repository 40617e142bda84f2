#include "sdpc/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdpc {

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalizes the columns
// of w by plane rotations, accumulating them in v.
void jacobi_sweeps(Matrix& w, Matrix& v) {
    const std::size_t n = w.cols();
    const std::size_t rows = w.rows();
    const double tol = 1e-15;
    const int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = cs * wp - sn * wq;
                    w(i, q) = sn * wp + cs * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sn * vq;
                    v(i, q) = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

// Fills zero columns of u with an orthonormal completion (needed when the
// input is rank deficient, so normalized data columns do not span all of u).
void complete_basis(Matrix& u, const std::vector<bool>& filled) {
    const std::size_t rows = u.rows();
    const std::size_t n = u.cols();
    for (std::size_t j = 0; j < n; ++j) {
        if (filled[j]) continue;
        for (std::size_t cand = 0; cand < rows; ++cand) {
            Vector e(rows, 0.0);
            e[cand] = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j || !(filled[k] || k < j)) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < rows; ++i) proj += u(i, k) * e[i];
                for (std::size_t i = 0; i < rows; ++i) e[i] -= proj * u(i, k);
            }
            const double nrm = norm(e);
            if (nrm > 0.5) {
                for (std::size_t i = 0; i < rows; ++i) u(i, j) = e[i] / nrm;
                break;
            }
        }
    }
}

SvdFactorization svd_tall(const Matrix& a) {
    const std::size_t rows = a.rows();
    const std::size_t n = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(n);
    jacobi_sweeps(w, v);

    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a_, std::size_t b_) { return sigma[a_] > sigma[b_]; });

    SvdFactorization f;
    f.u = Matrix(rows, n);
    f.v = Matrix(n, n);
    f.singular_values.resize(n);
    const double sigma_max = n == 0 ? 0.0 : sigma[order[0]];
    std::vector<bool> filled(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        f.singular_values[j] = sigma[src];
        for (std::size_t i = 0; i < n; ++i) f.v(i, j) = v(i, src);
        if (sigma[src] > sigma_max * 1e-250 && sigma[src] > 0.0) {
            for (std::size_t i = 0; i < rows; ++i) f.u(i, j) = w(i, src) / sigma[src];
            filled[j] = true;
        }
    }
    complete_basis(f.u, filled);
    return f;
}

}  // namespace

SvdFactorization jacobi_svd(const Matrix& a) {
    if (!a.all_finite()) throw InvalidInput("jacobi_svd: non-finite entries");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdFactorization ft = svd_tall(transpose(a));
    return SvdFactorization{ft.v, ft.singular_values, ft.u};
}

Matrix pseudo_inverse(const Matrix& m, double tol) {
    if (!m.all_finite()) throw InvalidInput("pseudo_inverse: non-finite entries");
    if (tol <= 0.0) throw InvalidInput("pseudo_inverse: tol must be positive");
    const SvdFactorization f = jacobi_svd(m);
    const std::size_t k = f.singular_values.size();
    const double sigma_max = k == 0 ? 0.0 : f.singular_values[0];
    const double cutoff = tol * sigma_max;
    // pinv = v * diag(1/sigma) * u^T
    Matrix pinv(m.cols(), m.rows());
    for (std::size_t r = 0; r < k; ++r) {
        const double s = f.singular_values[r];
        if (s <= cutoff || s == 0.0) continue;
        const double inv = 1.0 / s;
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vir = f.v(i, r) * inv;
            if (vir == 0.0) continue;
            for (std::size_t j = 0; j < m.rows(); ++j) pinv(i, j) += vir * f.u(j, r);
        }
    }
    return pinv;
}

std::size_t numerical_rank(const Matrix& m, double tol) {
    if (!m.all_finite()) throw InvalidInput("numerical_rank: non-finite entries");
    if (tol <= 0.0) throw InvalidInput("numerical_rank: tol must be positive");
    const SvdFactorization f = jacobi_svd(m);
    if (f.singular_values.empty()) return 0;
    const double cutoff = tol * f.singular_values[0];
    std::size_t rank = 0;
    for (double s : f.singular_values)
        if (s > cutoff && s > 0.0) ++rank;
    return rank;
}

}  // namespace sdpc
