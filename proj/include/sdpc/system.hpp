#pragma once

#include <functional>
#include <utility>

#include "sdpc/matrix.hpp"

namespace sdpc {

/// Control-affine system of relative degree two:
///   x1' = x2
///   x2' = g0(x1,x2) + sum_i g_i(x1,x2) u_i,   y = x1.
/// State dimension is 2m for input/output dimension m.
struct ControlAffineSystem {
    std::size_t m = 0;
    std::function<Vector(const Vector&, const Vector&)> drift;              // g0
    std::vector<std::function<Vector(const Vector&, const Vector&)>> input_maps;  // g1..gm

    std::size_t state_dim() const { return 2 * m; }
    Vector position(const Vector& x) const { return Vector(x.begin(), x.begin() + m); }
    Vector velocity(const Vector& x) const { return Vector(x.begin() + m, x.end()); }

    /// Full 2m-dimensional vector field under input u.
    Vector field(const Vector& x, const Vector& u) const;

    /// Input distribution G(x) = [g1(x) ... gm(x)], m x m.
    Matrix input_distribution(const Vector& x) const;
};

/// Forced Van der Pol vector field: (x2, nu*(1 - x1^2)*x2 - x1 + u).
Vector vdp_field(const Vector& x, double u, double nu);

/// Van der Pol oscillator as a ControlAffineSystem (m = 1).
ControlAffineSystem vdp_system(double nu);

/// One controller evaluation: total input u = mu + a_tau * u_fc plus the
/// pieces, kept for logging.
struct ControlSample {
    Vector u;
    Vector mu;
    Vector ufc;
    double a_tau = 0.0;
};

using ControllerFn = std::function<ControlSample(double, const Vector&)>;

/// Integrates the closed loop over [t0, t0+dt] with dt/substeps internal RK4
/// steps, evaluating the controller at every RK4 stage.
Vector integrate_interval(const ControlAffineSystem& sys, const ControllerFn& controller,
                          double t0, const Vector& x0, double dt, int substeps);

/// Flow under constant input over [0, dt].
Vector sampled_flow(const ControlAffineSystem& sys, const Vector& x, const Vector& u_const,
                    double dt, int substeps);

/// Logged closed-loop signals on a uniform grid. states/outputs have one more
/// entry than inputs: inputs[k] is the controller evaluation at times[k], the
/// left end of interval k.
struct Trajectory {
    double dt_log = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> outputs;
    std::vector<Vector> inputs;
    std::vector<Vector> mu;
    std::vector<Vector> ufc;
    std::vector<double> a_tau;
};

Trajectory simulate_closed_loop(const ControlAffineSystem& sys, const ControllerFn& controller,
                                const Vector& x0, double t_end, double dt_log, int substeps = 10);

/// Discrete LTI with the block structure
///   A = [0 I; A1 A2],  B = [0; B1],  C = [I 0],
/// B1 positive definite (symmetric part). Always minimal by construction;
/// construction validates this.
struct DiscreteLti {
    std::size_t m = 0;
    Matrix A, B, C;

    static DiscreteLti from_blocks(const Matrix& a1, const Matrix& a2, const Matrix& b1);
    std::size_t state_dim() const { return 2 * m; }
};

/// Exact affine update: returns (A x + B u, C x).
std::pair<Vector, Vector> lti_step(const DiscreteLti& sys, const Vector& x, const Vector& u);

}  // namespace sdpc
