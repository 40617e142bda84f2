#pragma once

#include <functional>
#include <optional>

#include "sdpc/edmd.hpp"
#include "sdpc/optim.hpp"

namespace sdpc {

/// Quadratic stage cost l(k, x, u) = (x - x_ref(k))' Q (x - x_ref(k)) + u' R u.
struct StageCost {
    Matrix q;
    Matrix r;
    std::function<Vector(long)> x_ref;  // sample index -> reference state

    static StageCost make(Matrix q, Matrix r, std::function<Vector(long)> x_ref);
};

double stage_cost(const StageCost& cost, long k, const Vector& x, const Vector& u);

/// One finite-horizon problem instance over the bilinear surrogate.
struct OcpProblem {
    const BilinearSurrogate* surrogate = nullptr;
    std::size_t horizon = 0;   // N >= 2
    BoxConstraint input_box;   // per-step box on u
    Vector initial_state;
    long time_index = 0;       // k

    void validate() const;
};

/// Iterated surrogate stepping from the initial state; returns x(0..N).
/// Controls outside the box are clamped (with a warning). A non-finite
/// prediction raises SurrogateBlowup carrying the offending step.
std::vector<Vector> rollout(const OcpProblem& problem, const std::vector<Vector>& controls);

struct OcpSolution {
    std::vector<Vector> controls;
    double objective = 0.0;
    int iterations = 0;
    double projected_gradient_norm = 0.0;
};

/// Shooting objective sum_k l(k, x(k), u(k)) along the surrogate rollout.
double ocp_objective(const OcpProblem& problem, const StageCost& cost,
                     const std::vector<Vector>& controls);

/// Its gradient w.r.t. the stacked controls, by reverse accumulation.
Vector ocp_gradient(const OcpProblem& problem, const StageCost& cost,
                    const std::vector<Vector>& controls);

/// Direct single shooting: minimizes the summed stage cost over the stacked
/// control vector with projected-gradient descent. The gradient is assembled
/// by reverse accumulation through the rollout (dictionary Jacobian chained
/// with the lifted operators). Runs until the projected-gradient norm falls
/// to 1e-6 * (1 + objective) or 500 iterations total.
OcpSolution solve_ocp(const OcpProblem& problem, const StageCost& cost,
                      const std::vector<Vector>* warm_start = nullptr);

/// Receding-horizon step: returns the first optimal control and the shifted
/// warm start (last entry duplicated).
std::pair<Vector, std::vector<Vector>> mpc_step(const OcpProblem& problem, const StageCost& cost,
                                                const std::vector<Vector>* previous_solution);

/// Zero-order-hold MPC feedback. The surrogate provider is queried at every
/// sampling instant, so refits between samples take effect immediately; a
/// null provider result means no model yet and mu = 0.
class MpcController {
public:
    using SurrogateProvider = std::function<const BilinearSurrogate*()>;

    struct Diagnostics {
        double objective = 0.0;
        int iterations = 0;
        int active_bounds = 0;
        bool cold = true;
    };

    MpcController(SurrogateProvider provider, StageCost cost, double dt, BoxConstraint input_box,
                  std::size_t horizon);

    /// mu(k dt), held constant on [k dt, (k+1) dt).
    Vector sample(long k, const Vector& x);

    const Diagnostics& last() const { return diag_; }
    void reset_warm_start() { warm_.clear(); }

private:
    SurrogateProvider provider_;
    StageCost cost_;
    double dt_;
    BoxConstraint box_;
    std::size_t horizon_;
    std::vector<Vector> warm_;
    Diagnostics diag_;
};

}  // namespace sdpc
