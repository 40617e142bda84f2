#pragma once

#include <functional>

#include "sdpc/matrix.hpp"

namespace sdpc {

/// Axis-aligned box { x : lower <= x <= upper }; entries may be +-inf.
struct BoxConstraint {
    Vector lower;
    Vector upper;

    static BoxConstraint unbounded(std::size_t n);
    static BoxConstraint symmetric(std::size_t n, double bound);

    std::size_t size() const { return lower.size(); }
    Vector project(const Vector& x) const;
    bool contains(const Vector& x, double tol = 0.0) const;
    void validate() const;  // lower[i] <= upper[i]
};

/// Minimizer of 1/2 x^T H x + g^T x subject to A x = b via the KKT system.
/// Empty A (0 rows) solves the unconstrained problem. Throws
/// DegenerateConstraints when the KKT matrix is singular or the residual
/// check fails.
Vector solve_equality_qp(const Matrix& hessian, const Vector& linear,
                         const Matrix& eq_matrix, const Vector& eq_rhs);

struct BoxMinimizeResult {
    Vector x;
    double objective = 0.0;
    int iterations = 0;
    double projected_gradient_norm = 0.0;
    bool converged = false;
};

/// Projected-gradient descent with Armijo backtracking (sufficient decrease
/// 1e-4, backtrack factor 0.5, initial step 1.0). Stops when the projected
/// gradient norm drops to step_tol or the iteration budget is exhausted.
/// Iterates are monotone in the objective and always feasible.
BoxMinimizeResult minimize_box(const std::function<double(const Vector&)>& objective,
                               const std::function<Vector(const Vector&)>& gradient,
                               const BoxConstraint& box, const Vector& x0,
                               int max_iters = 500, double step_tol = 1e-8);

}  // namespace sdpc
