#include "sdpc/koopman_mpc.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace sdpc {

namespace {

Vector flatten(const std::vector<Vector>& controls) {
    Vector z;
    for (const auto& u : controls) z.insert(z.end(), u.begin(), u.end());
    return z;
}

std::vector<Vector> split(const Vector& z, std::size_t m) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i + m <= z.size(); i += m)
        out.emplace_back(z.begin() + i, z.begin() + i + m);
    return out;
}

BoxConstraint stacked_box(const BoxConstraint& per_step, std::size_t n_steps) {
    BoxConstraint b;
    for (std::size_t k = 0; k < n_steps; ++k) {
        b.lower.insert(b.lower.end(), per_step.lower.begin(), per_step.lower.end());
        b.upper.insert(b.upper.end(), per_step.upper.begin(), per_step.upper.end());
    }
    return b;
}

}  // namespace

StageCost StageCost::make(Matrix q, Matrix r, std::function<Vector(long)> x_ref) {
    if (!cholesky_factor(q) || !cholesky_factor(r))
        throw InvalidInput("StageCost: Q and R must be symmetric positive definite");
    return StageCost{std::move(q), std::move(r), std::move(x_ref)};
}

double stage_cost(const StageCost& cost, long k, const Vector& x, const Vector& u) {
    if (x.size() != cost.q.rows() || u.size() != cost.r.rows())
        throw InvalidInput("stage_cost: dimension mismatch");
    Vector dx = vsub(x, cost.x_ref(k));
    return dot(dx, cost.q * dx) + dot(u, cost.r * u);
}

void OcpProblem::validate() const {
    if (surrogate == nullptr) throw InvalidInput("OcpProblem: no surrogate");
    if (horizon < 2) throw InvalidInput("OcpProblem: horizon must be >= 2");
    if (!all_finite(initial_state)) throw InvalidInput("OcpProblem: non-finite initial state");
    input_box.validate();
    if (input_box.size() != surrogate->input_dim())
        throw InvalidInput("OcpProblem: box dimension mismatch");
}

std::vector<Vector> rollout(const OcpProblem& problem, const std::vector<Vector>& controls) {
    problem.validate();
    if (controls.size() != problem.horizon)
        throw InvalidInput("rollout: need one control per horizon step");
    std::vector<Vector> states;
    states.reserve(problem.horizon + 1);
    states.push_back(problem.initial_state);
    for (std::size_t k = 0; k < problem.horizon; ++k) {
        Vector u = controls[k];
        if (!problem.input_box.contains(u, 1e-12)) {
            std::fprintf(stderr, "rollout: clamping control %zu into the input box\n", k);
            u = problem.input_box.project(u);
        }
        Vector next = problem.surrogate->step(states.back(), u);
        if (!all_finite(next)) throw SurrogateBlowup("rollout: non-finite prediction", k);
        states.push_back(std::move(next));
    }
    return states;
}

namespace {

// Objective and reverse-mode gradient over the stacked control vector.
struct ShootingProblem {
    const OcpProblem& problem;
    const StageCost& cost;

    double objective(const Vector& z) const {
        const std::size_t m = problem.surrogate->input_dim();
        const std::vector<Vector> u = split(z, m);
        Vector x = problem.initial_state;
        double j = 0.0;
        for (std::size_t k = 0; k < problem.horizon; ++k) {
            j += stage_cost(cost, problem.time_index + static_cast<long>(k), x, u[k]);
            x = problem.surrogate->step(x, u[k]);
            if (!all_finite(x)) return std::numeric_limits<double>::infinity();
        }
        return j;
    }

    Vector gradient(const Vector& z) const {
        const std::size_t m = problem.surrogate->input_dim();
        const std::size_t n = problem.surrogate->state_dim();
        const std::vector<Vector> u = split(z, m);
        std::vector<Vector> x(problem.horizon + 1);
        x[0] = problem.initial_state;
        for (std::size_t k = 0; k < problem.horizon; ++k)
            x[k + 1] = problem.surrogate->step(x[k], u[k]);

        Vector g(z.size(), 0.0);
        Vector lambda(n, 0.0);  // dJ/dx at step kappa+1
        for (std::size_t k = problem.horizon; k-- > 0;) {
            const long idx = problem.time_index + static_cast<long>(k);
            const Matrix bu = problem.surrogate->input_jacobian(x[k]);
            Vector gu = transpose(bu) * lambda;
            vaxpy(2.0, cost.r * u[k], gu);
            for (std::size_t i = 0; i < m; ++i) g[k * m + i] = gu[i];

            const Matrix ax = problem.surrogate->state_jacobian(x[k], u[k]);
            Vector lnew = transpose(ax) * lambda;
            Vector dx = vsub(x[k], cost.x_ref(idx));
            vaxpy(2.0, cost.q * dx, lnew);
            lambda = std::move(lnew);
        }
        return g;
    }
};

}  // namespace

double ocp_objective(const OcpProblem& problem, const StageCost& cost,
                     const std::vector<Vector>& controls) {
    problem.validate();
    if (controls.size() != problem.horizon) throw InvalidInput("ocp_objective: control count");
    return ShootingProblem{problem, cost}.objective(flatten(controls));
}

Vector ocp_gradient(const OcpProblem& problem, const StageCost& cost,
                    const std::vector<Vector>& controls) {
    problem.validate();
    if (controls.size() != problem.horizon) throw InvalidInput("ocp_gradient: control count");
    return ShootingProblem{problem, cost}.gradient(flatten(controls));
}

OcpSolution solve_ocp(const OcpProblem& problem, const StageCost& cost,
                      const std::vector<Vector>* warm_start) {
    problem.validate();
    const std::size_t m = problem.surrogate->input_dim();
    const BoxConstraint box = stacked_box(problem.input_box, problem.horizon);
    ShootingProblem sp{problem, cost};

    Vector z(problem.horizon * m, 0.0);
    if (warm_start != nullptr) {
        if (warm_start->size() != problem.horizon)
            throw InvalidInput("solve_ocp: warm start length mismatch");
        z = box.project(flatten(*warm_start));
        if (!std::isfinite(sp.objective(z))) z.assign(problem.horizon * m, 0.0);
    }

    auto obj = [&sp](const Vector& v) { return sp.objective(v); };
    auto grad = [&sp](const Vector& v) { return sp.gradient(v); };

    OcpSolution sol;
    int budget = 500;
    BoxMinimizeResult res;
    for (int round = 0; round < 3 && budget > 0; ++round) {
        const double tol = 1e-6 * (1.0 + sp.objective(z));
        res = minimize_box(obj, grad, box, z, budget, tol);
        z = res.x;
        budget -= std::max(res.iterations, 1);
        sol.iterations += res.iterations;
        if (res.projected_gradient_norm <= 1e-6 * (1.0 + res.objective)) break;
    }
    sol.controls = split(z, m);
    sol.objective = res.objective;
    sol.projected_gradient_norm = res.projected_gradient_norm;
    return sol;
}

std::pair<Vector, std::vector<Vector>> mpc_step(const OcpProblem& problem, const StageCost& cost,
                                                const std::vector<Vector>* previous_solution) {
    OcpSolution sol = solve_ocp(problem, cost, previous_solution);
    std::vector<Vector> warm(sol.controls.begin() + 1, sol.controls.end());
    warm.push_back(sol.controls.back());
    return {sol.controls.front(), std::move(warm)};
}

MpcController::MpcController(SurrogateProvider provider, StageCost cost, double dt,
                             BoxConstraint input_box, std::size_t horizon)
    : provider_(std::move(provider)),
      cost_(std::move(cost)),
      dt_(dt),
      box_(std::move(input_box)),
      horizon_(horizon) {
    if (dt_ <= 0.0) throw InvalidInput("MpcController: dt must be positive");
    if (horizon_ < 2) throw InvalidInput("MpcController: horizon must be >= 2");
}

Vector MpcController::sample(long k, const Vector& x) {
    const BilinearSurrogate* sur = provider_();
    if (sur == nullptr) {
        diag_ = Diagnostics{};  // cold start: no model, predictive input stays 0
        return Vector(box_.size(), 0.0);
    }
    OcpProblem problem{sur, horizon_, box_, x, k};
    OcpSolution sol = solve_ocp(problem, cost_, warm_.empty() ? nullptr : &warm_);
    warm_.assign(sol.controls.begin() + 1, sol.controls.end());
    warm_.push_back(sol.controls.back());

    diag_.cold = false;
    diag_.objective = sol.objective;
    diag_.iterations = sol.iterations;
    diag_.active_bounds = 0;
    for (const auto& u : sol.controls)
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u[i] <= box_.lower[i] + 1e-12 || u[i] >= box_.upper[i] - 1e-12)
                ++diag_.active_bounds;
    return sol.controls.front();
}

}  // namespace sdpc
