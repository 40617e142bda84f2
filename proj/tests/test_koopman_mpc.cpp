#include <cmath>
#include <random>

#include "doctest.h"
#include "sdpc/koopman_mpc.hpp"
#include "sdpc/system.hpp"

using namespace sdpc;

namespace {

// Exactly-representable scalar linear control system x+ = a x + b u.
BilinearSurrogate scalar_surrogate(double a, double b) {
    Dictionary d = make_monomial_dictionary(1, 1);
    auto snap = [&](double u, const Vector& label) {
        SnapshotSet s;
        s.input = label;
        s.dt = 0.1;
        for (double x : {-1.0, 0.4, 1.3}) s.append(Vector{x}, Vector{a * x + b * u});
        return s;
    };
    return fit_bilinear(snap(0.0, Vector{0.0}), {snap(1.0, Vector{1.0})}, d);
}

StageCost zero_ref_cost(double q, double r) {
    return StageCost::make(Matrix::from_rows({{q}}), Matrix::from_rows({{r}}),
                           [](long) { return Vector{0.0}; });
}

}  // namespace

TEST_CASE("stage_cost evaluation") {
    StageCost c = StageCost::make(Matrix::from_rows({{1e4, 0.0}, {0.0, 1.0}}),
                                  Matrix::from_rows({{1e-4}}),
                                  [](long) { return Vector{0.0, 0.0}; });
    CHECK(stage_cost(c, 0, Vector{0.0, 0.0}, Vector{0.0}) == 0.0);
    CHECK(stage_cost(c, 3, Vector{0.1, 0.0}, Vector{1.0}) ==
          doctest::Approx(100.0001).epsilon(1e-12));
    // Scaling u by 2 quadruples the input term.
    const double base = stage_cost(c, 0, Vector{0.0, 0.0}, Vector{1.5});
    CHECK(stage_cost(c, 0, Vector{0.0, 0.0}, Vector{3.0}) == doctest::Approx(4.0 * base));
}

TEST_CASE("StageCost rejects indefinite weights") {
    CHECK_THROWS_AS(StageCost::make(Matrix::from_rows({{-1.0}}), Matrix::from_rows({{1.0}}),
                                    [](long) { return Vector{0.0}; }),
                    InvalidInput);
}

TEST_CASE("rollout on an exact linear surrogate") {
    BilinearSurrogate sur = scalar_surrogate(0.8, 0.5);
    OcpProblem p{&sur, 2, BoxConstraint::symmetric(1, 10.0), Vector{1.0}, 0};

    std::vector<Vector> states = rollout(p, {Vector{0.2}, Vector{-0.4}});
    // Closed-form two-step map.
    const double x1 = 0.8 * 1.0 + 0.5 * 0.2;
    const double x2 = 0.8 * x1 + 0.5 * (-0.4);
    CHECK(states[1][0] == doctest::Approx(x1).epsilon(1e-10));
    CHECK(states[2][0] == doctest::Approx(x2).epsilon(1e-10));

    // Autonomous rollout and controlled equilibrium.
    std::vector<Vector> states0 = rollout(p, {Vector{0.0}, Vector{0.0}});
    CHECK(states0[2][0] == doctest::Approx(0.64).epsilon(1e-10));
    OcpProblem pe{&sur, 2, BoxConstraint::symmetric(1, 10.0), Vector{0.0}, 0};
    std::vector<Vector> eq = rollout(pe, {Vector{0.0}, Vector{0.0}});
    CHECK(norm(eq[1]) < 1e-12);
    CHECK(norm(eq[2]) < 1e-12);
}

TEST_CASE("solve_ocp finds the controlled equilibrium and the scalar closed form") {
    BilinearSurrogate sur = scalar_surrogate(0.9, 0.4);
    StageCost cost = zero_ref_cost(1.0, 0.1);

    // At the reference equilibrium with u = 0 feasible, zero is optimal.
    OcpProblem p0{&sur, 4, BoxConstraint::symmetric(1, 2.0), Vector{0.0}, 0};
    OcpSolution s0 = solve_ocp(p0, cost, nullptr);
    CHECK(s0.objective == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto& u : s0.controls) CHECK(std::abs(u[0]) < 1e-9);

    // N = 2 closed form: u1* = 0, u0* = q b (r1 - a x) / (r_w + q b^2).
    const double q = 2.0, rw = 0.3, a = 0.9, b = 0.4, xhat = 1.2;
    StageCost cost2 = zero_ref_cost(q, rw);
    OcpProblem p2{&sur, 2, BoxConstraint::symmetric(1, 2.0), Vector{xhat}, 0};
    OcpSolution s2 = solve_ocp(p2, cost2, nullptr);
    const double u0_star = q * b * (0.0 - a * xhat) / (rw + q * b * b);
    CHECK(s2.controls[0][0] == doctest::Approx(u0_star).epsilon(1e-5));
    CHECK(std::abs(s2.controls[1][0]) < 1e-5);
}

TEST_CASE("solve_ocp analytic gradient matches central differences") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-0.6, 0.6);
    Dictionary d = make_monomial_dictionary(2, 2);
    // Random mildly-contractive lifted operators.
    auto random_surrogate = [&]() {
        BilinearSurrogate sur;
        sur.dict = d;
        sur.dt = 0.1;
        const std::size_t sz = d.size();
        auto rnd = [&](double diag) {
            Matrix k(sz, sz);
            for (std::size_t i = 0; i < sz; ++i)
                for (std::size_t j = 0; j < sz; ++j) k(i, j) = 0.15 * dist(rng);
            for (std::size_t i = 0; i < sz; ++i) k(i, i) += diag;
            return k;
        };
        sur.k0 = rnd(0.8);
        sur.ki = {rnd(0.75)};
        auto coord_rows = [&](const Matrix& k) {
            Matrix r(d.n, sz);
            for (std::size_t i = 0; i < d.n; ++i) r.set_row(i, k.row(d.coordinate_rows[i]));
            return r;
        };
        sur.r0 = coord_rows(sur.k0);
        sur.ri = {coord_rows(sur.ki[0])};
        return sur;
    };

    for (int trial = 0; trial < 10; ++trial) {
        BilinearSurrogate sur = random_surrogate();
        const std::size_t n_hor = 2 + static_cast<std::size_t>(trial % 8);
        OcpProblem p{&sur, std::max<std::size_t>(n_hor, 2), BoxConstraint::unbounded(1),
                     Vector{dist(rng), dist(rng)}, 0};
        StageCost cost = StageCost::make(Matrix::from_rows({{3.0, 0.0}, {0.0, 1.0}}),
                                         Matrix::from_rows({{0.5}}),
                                         [](long) { return Vector{0.1, -0.2}; });
        std::vector<Vector> u(p.horizon, Vector{0.0});
        for (auto& ui : u) ui[0] = dist(rng);

        // Finite-difference oracle against the analytic reverse-mode gradient.
        const Vector g = ocp_gradient(p, cost, u);
        const double h = 1e-6;
        for (std::size_t k = 0; k < p.horizon; ++k) {
            std::vector<Vector> up = u, um = u;
            up[k][0] += h;
            um[k][0] -= h;
            const double fd = (ocp_objective(p, cost, up) - ocp_objective(p, cost, um)) / (2.0 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("mpc_step determinism and warm-start shift") {
    BilinearSurrogate sur = scalar_surrogate(0.95, 0.3);
    StageCost cost = zero_ref_cost(1.0, 0.01);
    OcpProblem p{&sur, 5, BoxConstraint::symmetric(1, 2.0), Vector{1.0}, 0};

    auto [mu1, warm1] = mpc_step(p, cost, nullptr);
    auto [mu2, warm2] = mpc_step(p, cost, nullptr);
    CHECK(mu1[0] == mu2[0]);
    REQUIRE(warm1.size() == 5);
    CHECK(warm1[4][0] == warm1[3][0]);  // last entry duplicated

    // Inputs respect the box exactly.
    OcpProblem tight{&sur, 5, BoxConstraint::symmetric(1, 0.05), Vector{2.0}, 0};
    auto [mu3, warm3] = mpc_step(tight, cost, nullptr);
    CHECK(std::abs(mu3[0]) <= 0.05);
    for (const auto& w : warm3) CHECK(std::abs(w[0]) <= 0.05);
}

TEST_CASE("solver is monotone against its warm start") {
    BilinearSurrogate sur = scalar_surrogate(0.9, 0.5);
    StageCost cost = zero_ref_cost(1.0, 0.1);
    OcpProblem p{&sur, 6, BoxConstraint::symmetric(1, 2.0), Vector{1.5}, 0};
    std::vector<Vector> bad_warm(6, Vector{1.9});
    auto objective_of = [&](const std::vector<Vector>& uu) {
        std::vector<Vector> xs = rollout(p, uu);
        double j = 0.0;
        for (std::size_t k = 0; k < 6; ++k) j += stage_cost(cost, static_cast<long>(k), xs[k], uu[k]);
        return j;
    };
    OcpSolution sol = solve_ocp(p, cost, &bad_warm);
    CHECK(sol.objective <= objective_of(bad_warm) + 1e-12);
    OcpSolution from_zero = solve_ocp(p, cost, nullptr);
    CHECK(sol.objective <= doctest::Approx(from_zero.objective).epsilon(1e-4));
}

TEST_CASE("mpc controller: cold start, provider swap, closed-loop decrease") {
    BilinearSurrogate sur_a = scalar_surrogate(0.9, 0.4);
    BilinearSurrogate sur_b = scalar_surrogate(0.5, 0.8);
    const BilinearSurrogate* current = nullptr;

    StageCost cost = zero_ref_cost(1.0, 0.01);
    MpcController ctrl([&current]() { return current; }, cost, 0.1,
                       BoxConstraint::symmetric(1, 2.0), 5);

    // Cold start.
    Vector mu = ctrl.sample(0, Vector{1.0});
    CHECK(mu[0] == 0.0);
    CHECK(ctrl.last().cold);

    current = &sur_a;
    Vector mu_a = ctrl.sample(1, Vector{1.0});
    CHECK_FALSE(ctrl.last().cold);
    ctrl.reset_warm_start();
    current = &sur_b;
    Vector mu_b = ctrl.sample(1, Vector{1.0});
    CHECK(mu_a[0] != mu_b[0]);  // the swapped model is used immediately

    // Receding horizon on the true (= surrogate) system decreases |x|.
    current = &sur_a;
    ctrl.reset_warm_start();
    Vector x{1.8};
    double prev = std::abs(x[0]);
    for (long k = 0; k < 25; ++k) {
        Vector u = ctrl.sample(k, x);
        x = sur_a.step(x, u);
    }
    CHECK(std::abs(x[0]) < 0.05);
    CHECK(std::abs(x[0]) < prev);
}
