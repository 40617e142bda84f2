#include "sdpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdpc {

BoxConstraint BoxConstraint::unbounded(std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    return BoxConstraint{Vector(n, -inf), Vector(n, inf)};
}

BoxConstraint BoxConstraint::symmetric(std::size_t n, double bound) {
    return BoxConstraint{Vector(n, -bound), Vector(n, bound)};
}

Vector BoxConstraint::project(const Vector& x) const {
    if (x.size() != lower.size()) throw InvalidInput("box project: size mismatch");
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    return y;
}

bool BoxConstraint::contains(const Vector& x, double tol) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    return true;
}

void BoxConstraint::validate() const {
    if (lower.size() != upper.size()) throw InvalidInput("box: bound size mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] <= upper[i])) throw InvalidInput("box: lower exceeds upper");
}

Vector solve_equality_qp(const Matrix& hessian, const Vector& linear,
                         const Matrix& eq_matrix, const Vector& eq_rhs) {
    const std::size_t n = hessian.rows();
    if (hessian.cols() != n) throw InvalidInput("solve_equality_qp: hessian not square");
    if (linear.size() != n) throw InvalidInput("solve_equality_qp: linear size mismatch");
    const std::size_t k = eq_matrix.rows();
    if (k > 0 && eq_matrix.cols() != n) throw InvalidInput("solve_equality_qp: eq matrix shape");
    if (eq_rhs.size() != k) throw InvalidInput("solve_equality_qp: eq rhs size mismatch");

    Matrix kkt(n + k, n + k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) kkt(i, j) = hessian(i, j);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            kkt(n + i, j) = eq_matrix(i, j);
            kkt(j, n + i) = eq_matrix(i, j);
        }
    }
    Vector rhs(n + k);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -linear[i];
    for (std::size_t i = 0; i < k; ++i) rhs[n + i] = eq_rhs[i];

    Vector sol = lu_solve(kkt, rhs);  // throws DegenerateConstraints when singular
    Vector x(sol.begin(), sol.begin() + n);

    // KKT residual guard; a large residual indicates near-singularity that
    // slipped past the pivot test.
    Vector res = vsub(kkt * sol, rhs);
    if (norm(res) > 1e-8 * (1.0 + norm(rhs)) * std::max(1.0, kkt.max_abs()))
        throw DegenerateConstraints("solve_equality_qp: ill-conditioned KKT system");
    return x;
}

BoxMinimizeResult minimize_box(const std::function<double(const Vector&)>& objective,
                               const std::function<Vector(const Vector&)>& gradient,
                               const BoxConstraint& box, const Vector& x0,
                               int max_iters, double step_tol) {
    box.validate();
    BoxMinimizeResult r;
    r.x = box.project(x0);
    r.objective = objective(r.x);
    if (!std::isfinite(r.objective)) throw Diverged("minimize_box: non-finite objective at start");

    const double armijo = 1e-4;
    const double backtrack = 0.5;

    for (int it = 0; it < max_iters; ++it) {
        Vector g = gradient(r.x);
        Vector pg = vsub(r.x, box.project(vsub(r.x, g)));
        r.projected_gradient_norm = norm(pg);
        if (r.projected_gradient_norm <= step_tol) {
            r.converged = true;
            return r;
        }

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vector trial = box.project(vsub(r.x, vscale(alpha, g)));
            const double decrease = dot(g, vsub(r.x, trial));
            if (decrease <= 0.0) break;  // no feasible descent along -g
            const double f_trial = objective(trial);
            if (std::isfinite(f_trial) && f_trial <= r.objective - armijo * decrease) {
                r.x = std::move(trial);
                r.objective = f_trial;
                accepted = true;
                break;
            }
            alpha *= backtrack;
        }
        ++r.iterations;
        if (!accepted) return r;  // stalled: keep the best (monotone) iterate
    }
    return r;
}

}  // namespace sdpc
