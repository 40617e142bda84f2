#include "sdpc/system.hpp"

#include <cmath>

#include "sdpc/ode.hpp"
#include "sdpc/svd.hpp"

namespace sdpc {

Vector ControlAffineSystem::field(const Vector& x, const Vector& u) const {
    if (x.size() != state_dim()) throw InvalidInput("system field: state size mismatch");
    if (u.size() != m) throw InvalidInput("system field: input size mismatch");
    const Vector x1 = position(x);
    const Vector x2 = velocity(x);
    Vector acc = drift(x1, x2);
    for (std::size_t i = 0; i < m; ++i) vaxpy(u[i], input_maps[i](x1, x2), acc);
    Vector dx(state_dim());
    for (std::size_t i = 0; i < m; ++i) dx[i] = x2[i];
    for (std::size_t i = 0; i < m; ++i) dx[m + i] = acc[i];
    return dx;
}

Matrix ControlAffineSystem::input_distribution(const Vector& x) const {
    const Vector x1 = position(x);
    const Vector x2 = velocity(x);
    std::vector<Vector> cols;
    cols.reserve(m);
    for (std::size_t i = 0; i < m; ++i) cols.push_back(input_maps[i](x1, x2));
    return Matrix::from_columns(cols);
}

Vector vdp_field(const Vector& x, double u, double nu) {
    if (x.size() != 2) throw InvalidInput("vdp_field: state must be 2-dimensional");
    return Vector{x[1], nu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u};
}

ControlAffineSystem vdp_system(double nu) {
    ControlAffineSystem sys;
    sys.m = 1;
    sys.drift = [nu](const Vector& x1, const Vector& x2) {
        return Vector{nu * (1.0 - x1[0] * x1[0]) * x2[0] - x1[0]};
    };
    sys.input_maps = {[](const Vector&, const Vector&) { return Vector{1.0}; }};
    return sys;
}

Vector integrate_interval(const ControlAffineSystem& sys, const ControllerFn& controller,
                          double t0, const Vector& x0, double dt, int substeps) {
    if (dt <= 0.0) throw InvalidInput("integrate_interval: dt must be positive");
    if (substeps < 1) throw InvalidInput("integrate_interval: substeps must be >= 1");
    const double h = dt / substeps;
    VectorField closed = [&](double t, const Vector& x) {
        ControlSample s = controller(t, x);
        if (!all_finite(s.u)) throw IntegrationBlowup("closed loop: non-finite input", t);
        return sys.field(x, s.u);
    };
    Vector x = x0;
    for (int i = 0; i < substeps; ++i) x = rk4_step(closed, t0 + i * h, x, h);
    return x;
}

Vector sampled_flow(const ControlAffineSystem& sys, const Vector& x, const Vector& u_const,
                    double dt, int substeps) {
    ControllerFn hold = [&](double, const Vector&) {
        return ControlSample{u_const, u_const, Vector(u_const.size(), 0.0), 0.0};
    };
    return integrate_interval(sys, hold, 0.0, x, dt, substeps);
}

Trajectory simulate_closed_loop(const ControlAffineSystem& sys, const ControllerFn& controller,
                                const Vector& x0, double t_end, double dt_log, int substeps) {
    if (dt_log <= 0.0) throw InvalidInput("simulate_closed_loop: dt_log must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt_log));

    Trajectory traj;
    traj.dt_log = dt_log;
    Vector x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.outputs.push_back(sys.position(x));
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = k * dt_log;
        ControlSample s = controller(t, x);
        traj.inputs.push_back(s.u);
        traj.mu.push_back(s.mu);
        traj.ufc.push_back(s.ufc);
        traj.a_tau.push_back(s.a_tau);
        x = integrate_interval(sys, controller, t, x, dt_log, substeps);
        traj.times.push_back((k + 1) * dt_log);
        traj.states.push_back(x);
        traj.outputs.push_back(sys.position(x));
    }
    return traj;
}

DiscreteLti DiscreteLti::from_blocks(const Matrix& a1, const Matrix& a2, const Matrix& b1) {
    const std::size_t m = a1.rows();
    if (a1.cols() != m || a2.rows() != m || a2.cols() != m || b1.rows() != m || b1.cols() != m)
        throw InvalidInput("DiscreteLti: blocks must be square m x m");

    // Symmetric part of B1 must be positive definite.
    Matrix sym(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) sym(i, j) = 0.5 * (b1(i, j) + b1(j, i));
    if (!cholesky_factor(sym)) throw InvalidInput("DiscreteLti: B1 symmetric part not positive definite");

    DiscreteLti sys;
    sys.m = m;
    const std::size_t n = 2 * m;
    sys.A = Matrix(n, n);
    for (std::size_t i = 0; i < m; ++i) sys.A(i, m + i) = 1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            sys.A(m + i, j) = a1(i, j);
            sys.A(m + i, m + j) = a2(i, j);
        }
    sys.B = Matrix(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) sys.B(m + i, j) = b1(i, j);
    sys.C = Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) sys.C(i, i) = 1.0;

    // Minimality check (controllability and observability within rank tolerance).
    Matrix ctrb(n, n * m);
    Matrix power = sys.B;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) ctrb(i, k * m + j) = power(i, j);
        power = sys.A * power;
    }
    if (numerical_rank(ctrb) != n) throw InvalidInput("DiscreteLti: not controllable");

    Matrix obsv(n * m, n);
    Matrix cpow = sys.C;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) obsv(k * m + i, j) = cpow(i, j);
        cpow = cpow * sys.A;
    }
    if (numerical_rank(obsv) != n) throw InvalidInput("DiscreteLti: not observable");
    return sys;
}

std::pair<Vector, Vector> lti_step(const DiscreteLti& sys, const Vector& x, const Vector& u) {
    if (x.size() != sys.state_dim() || u.size() != sys.m)
        throw InvalidInput("lti_step: dimension mismatch");
    Vector xn = sys.A * x;
    vaxpy(1.0, sys.B * u, xn);
    return {xn, sys.C * x};
}

}  // namespace sdpc
