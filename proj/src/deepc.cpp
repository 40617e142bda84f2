#include "sdpc/deepc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdpc/svd.hpp"

namespace sdpc {

namespace {

constexpr double kNuRidge = 1e-10;  // pins a unique nu on the rank-deficient span

Vector stack_windows(const std::vector<Vector>& windows) {
    Vector out;
    for (const auto& w : windows) out.insert(out.end(), w.begin(), w.end());
    return out;
}

std::vector<Vector> unstack(const Vector& flat, std::size_t dim) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i + dim <= flat.size(); i += dim)
        out.emplace_back(flat.begin() + i, flat.begin() + i + dim);
    return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    Matrix m(top.rows() + bottom.rows(), top.cols());
    for (std::size_t i = 0; i < top.rows(); ++i)
        for (std::size_t j = 0; j < top.cols(); ++j) m(i, j) = top(i, j);
    for (std::size_t i = 0; i < bottom.rows(); ++i)
        for (std::size_t j = 0; j < bottom.cols(); ++j) m(top.rows() + i, j) = bottom(i, j);
    return m;
}

// Accumulates sum_i block_i(a)^T w block_i(b) over consecutive row blocks.
Matrix block_weighted_gram(const Matrix& a, const Matrix& w, const Matrix& b) {
    const std::size_t dim = w.rows();
    Matrix out(a.cols(), b.cols());
    const std::size_t blocks = a.rows() / dim;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const Matrix ab = a.row_block(blk * dim, dim);
        const Matrix bb = b.row_block(blk * dim, dim);
        out = out + transpose(ab) * (w * bb);
    }
    return out;
}

}  // namespace

Matrix build_hankel(const std::vector<Vector>& signal, std::size_t depth) {
    if (depth == 0) throw InvalidInput("build_hankel: depth must be positive");
    const std::size_t d = signal.size();
    if (d < depth) throw InsufficientData("build_hankel: sequence shorter than depth");
    const std::size_t dim = signal.front().size();
    for (const auto& s : signal)
        if (s.size() != dim) throw InvalidInput("build_hankel: ragged signal");

    Matrix h(depth * dim, d - depth + 1);
    for (std::size_t j = 0; j + depth <= d; ++j)
        for (std::size_t l = 0; l < depth; ++l)
            for (std::size_t i = 0; i < dim; ++i) h(l * dim + i, j) = signal[j + l][i];
    return h;
}

bool is_persistently_exciting(const std::vector<Vector>& u, std::size_t order) {
    if (order == 0) return false;
    if (u.size() < order) return false;
    const Matrix h = build_hankel(u, order);
    return numerical_rank(h) == order * u.front().size();
}

HankelStack HankelStack::make(std::vector<Vector> u, std::vector<Vector> y, std::size_t depth) {
    if (u.size() != y.size()) throw InvalidInput("HankelStack: input/output length mismatch");
    if (u.empty()) throw InsufficientData("HankelStack: no data");
    const std::size_t m = u.front().size();
    if (!is_persistently_exciting(u, depth + 2 * m))
        throw PreconditionError("HankelStack: input not persistently exciting of order L + 2m");
    HankelStack s;
    s.depth = depth;
    s.hu = build_hankel(u, depth);
    s.hy = build_hankel(y, depth);
    s.u_data = std::move(u);
    s.y_data = std::move(y);
    return s;
}

std::optional<Vector> fl_explain(const HankelStack& stack, const std::vector<Vector>& u_test,
                                 const std::vector<Vector>& y_test) {
    if (u_test.size() != stack.depth || y_test.size() != stack.depth)
        throw InvalidInput("fl_explain: test trajectory must have length L");
    const Matrix s = vstack(stack.hu, stack.hy);
    const Vector rhs = concat(stack_windows(u_test), stack_windows(y_test));
    const Vector nu = pseudo_inverse(s) * rhs;
    const double residual = norm(vsub(s * nu, rhs));
    if (residual > 1e-8 * (1.0 + norm(rhs))) return std::nullopt;
    return nu;
}

std::pair<std::vector<Vector>, std::vector<Vector>> fl_generate(const HankelStack& stack,
                                                                const Vector& nu) {
    if (nu.size() != stack.coefficient_dim()) throw InvalidInput("fl_generate: nu size mismatch");
    const Vector u_flat = stack.hu * nu;
    const Vector y_flat = stack.hy * nu;
    return {unstack(u_flat, stack.input_dim()), unstack(y_flat, stack.output_dim())};
}

void DeepcConfig::validate(std::size_t m) const {
    if (horizon < 1) throw InvalidInput("DeepcConfig: horizon must be >= 1");
    if (q.rows() != m || q.cols() != m || r.rows() != m || r.cols() != m)
        throw InvalidInput("DeepcConfig: weight dimensions must match the signal dimension");
    if (!cholesky_factor(q) || !cholesky_factor(r))
        throw InvalidInput("DeepcConfig: Q and R must be symmetric positive definite");
    if (!(u_max > 0.0)) throw InvalidInput("DeepcConfig: u_max must be positive");
}

DeepcSolution deepc_step(const HankelStack& stack, const std::vector<Vector>& u_past,
                         const std::vector<Vector>& y_past,
                         const std::vector<Vector>& y_ref_window, const DeepcConfig& cfg) {
    const std::size_t m = stack.input_dim();
    const std::size_t p = stack.output_dim();
    const std::size_t n_past = cfg.past_window(m);
    const std::size_t big_n = cfg.horizon;
    cfg.validate(m);
    if (stack.depth != big_n + n_past)
        throw InvalidInput("deepc_step: stack depth must equal N + 2m");
    if (u_past.size() != n_past || y_past.size() != n_past)
        throw InvalidInput("deepc_step: past windows must have length 2m");
    if (y_ref_window.size() != big_n)
        throw InvalidInput("deepc_step: reference window must have length N");

    const Matrix u_past_rows = stack.hu.row_block(0, n_past * m);
    const Matrix y_past_rows = stack.hy.row_block(0, n_past * p);
    const Matrix u_fut = stack.hu.row_block(n_past * m, big_n * m);
    const Matrix y_fut = stack.hy.row_block(n_past * p, big_n * p);

    const Matrix a_pin = vstack(u_past_rows, y_past_rows);
    const Vector b_pin = concat(stack_windows(u_past), stack_windows(y_past));
    const Vector ref_flat = stack_windows(y_ref_window);

    // Equality-constrained path: cost condensed into nu.
    Matrix hess = block_weighted_gram(y_fut, cfg.q, y_fut) + block_weighted_gram(u_fut, cfg.r, u_fut);
    hess = 2.0 * hess;
    for (std::size_t i = 0; i < hess.rows(); ++i) hess(i, i) += 2.0 * kNuRidge;
    Vector lin(stack.coefficient_dim(), 0.0);
    {
        // -2 * Y^T Qbar ref
        for (std::size_t blk = 0; blk < big_n; ++blk) {
            const Matrix yb = y_fut.row_block(blk * p, p);
            const Vector qr = cfg.q * Vector(ref_flat.begin() + blk * p, ref_flat.begin() + (blk + 1) * p);
            const Vector contrib = transpose(yb) * qr;
            vaxpy(-2.0, contrib, lin);
        }
    }

    Vector nu = solve_equality_qp(hess, lin, a_pin, b_pin);
    if (norm(vsub(a_pin * nu, b_pin)) > 1e-8 * (1.0 + norm(b_pin)))
        throw InconsistentHistory("deepc_step: past window cannot be pinned");

    auto within_bound = [&](const std::vector<Vector>& u_pred) {
        for (const auto& ui : u_pred)
            if (norm(ui) > cfg.u_max + 1e-12) return false;
        return true;
    };

    std::vector<Vector> u_pred = unstack(u_fut * nu, m);

    if (!within_bound(u_pred)) {
        // Reduce to the future inputs: the pinned history plus a choice of
        // future inputs determines nu (minimum-norm section of the combined
        // linear system), making the norm bound a small box/ball problem.
        const Matrix big_m = vstack(a_pin, u_fut);
        const Matrix pinv_m = pseudo_inverse(big_m);
        const std::size_t npin = a_pin.rows();
        Matrix p_b(pinv_m.rows(), npin), p_w(pinv_m.rows(), big_n * m);
        for (std::size_t i = 0; i < pinv_m.rows(); ++i) {
            for (std::size_t j = 0; j < npin; ++j) p_b(i, j) = pinv_m(i, j);
            for (std::size_t j = 0; j < big_n * m; ++j) p_w(i, j) = pinv_m(i, npin + j);
        }
        const Vector nu_base = p_b * b_pin;

        Vector w0(big_n * m);
        {
            const Vector u_flat = u_fut * nu;
            for (std::size_t blk = 0; blk < big_n; ++blk) {
                Vector ui(u_flat.begin() + blk * m, u_flat.begin() + (blk + 1) * m);
                const double ni = norm(ui);
                if (ni > cfg.u_max) ui = vscale(cfg.u_max / ni, ui);
                for (std::size_t i = 0; i < m; ++i) w0[blk * m + i] = ui[i];
            }
        }

        // Consistency of the reduction at the starting point.
        {
            Vector nu_w0 = nu_base;
            vaxpy(1.0, p_w * w0, nu_w0);
            const Vector rhs = concat(b_pin, w0);
            if (norm(vsub(big_m * nu_w0, rhs)) > 1e-8 * (1.0 + norm(rhs)))
                throw InconsistentHistory("deepc_step: reduced system inconsistent with history");
        }

        auto nu_of = [&](const Vector& w) {
            Vector v = nu_base;
            vaxpy(1.0, p_w * w, v);
            return v;
        };
        auto objective = [&](const Vector& w) {
            const Vector v = nu_of(w);
            const Vector y_flat = y_fut * v;
            double j = kNuRidge * dot(v, v);
            for (std::size_t blk = 0; blk < big_n; ++blk) {
                Vector dy(y_flat.begin() + blk * p, y_flat.begin() + (blk + 1) * p);
                for (std::size_t i = 0; i < p; ++i) dy[i] -= ref_flat[blk * p + i];
                j += dot(dy, cfg.q * dy);
                const Vector wi(w.begin() + blk * m, w.begin() + (blk + 1) * m);
                j += dot(wi, cfg.r * wi);
            }
            return j;
        };
        const Matrix yh = y_fut * p_w;
        const Vector y_base = y_fut * nu_base;
        auto gradient = [&](const Vector& w) {
            Vector g(w.size(), 0.0);
            Vector y_flat = y_base;
            vaxpy(1.0, yh * w, y_flat);
            Vector qdy(y_flat.size());
            for (std::size_t blk = 0; blk < big_n; ++blk) {
                Vector dy(y_flat.begin() + blk * p, y_flat.begin() + (blk + 1) * p);
                for (std::size_t i = 0; i < p; ++i) dy[i] -= ref_flat[blk * p + i];
                const Vector q_dy = cfg.q * dy;
                for (std::size_t i = 0; i < p; ++i) qdy[blk * p + i] = q_dy[i];
                const Vector wi(w.begin() + blk * m, w.begin() + (blk + 1) * m);
                const Vector rw = cfg.r * wi;
                for (std::size_t i = 0; i < m; ++i) g[blk * m + i] += 2.0 * rw[i];
            }
            vaxpy(2.0, transpose(yh) * qdy, g);
            const Vector v = nu_of(w);
            vaxpy(2.0 * kNuRidge, transpose(p_w) * v, g);
            return g;
        };

        Vector w_opt;
        if (m == 1) {
            const BoxConstraint box = BoxConstraint::symmetric(big_n, cfg.u_max);
            w_opt = minimize_box(objective, gradient, box, w0, 2000, 1e-10).x;
        } else {
            // Quadratic penalty on per-step input norms, tightened by factor 10.
            double rho = 10.0;
            Vector w = w0;
            for (int round = 0; round < 5; ++round) {
                auto pen_obj = [&](const Vector& ww) {
                    double j = objective(ww);
                    for (std::size_t blk = 0; blk < big_n; ++blk) {
                        const Vector wi(ww.begin() + blk * m, ww.begin() + (blk + 1) * m);
                        const double over = std::max(0.0, norm(wi) - cfg.u_max);
                        j += rho * over * over;
                    }
                    return j;
                };
                auto pen_grad = [&](const Vector& ww) {
                    Vector g = gradient(ww);
                    for (std::size_t blk = 0; blk < big_n; ++blk) {
                        const Vector wi(ww.begin() + blk * m, ww.begin() + (blk + 1) * m);
                        const double ni = norm(wi);
                        const double over = ni - cfg.u_max;
                        if (over > 0.0 && ni > 0.0) {
                            for (std::size_t i = 0; i < m; ++i)
                                g[blk * m + i] += 2.0 * rho * over * wi[i] / ni;
                        }
                    }
                    return g;
                };
                w = minimize_box(pen_obj, pen_grad, BoxConstraint::unbounded(w.size()), w, 800, 1e-10).x;
                rho *= 10.0;
            }
            // Final projection onto the norm balls keeps the bound exact.
            for (std::size_t blk = 0; blk < big_n; ++blk) {
                Vector wi(w.begin() + blk * m, w.begin() + (blk + 1) * m);
                const double ni = norm(wi);
                if (ni > cfg.u_max)
                    for (std::size_t i = 0; i < m; ++i) w[blk * m + i] *= cfg.u_max / ni;
            }
            w_opt = w;
        }
        nu = nu_of(w_opt);
        u_pred = unstack(u_fut * nu, m);
        // Numerical safety: the reconstructed inputs equal w_opt up to solver
        // precision; clamp the residual excess.
        for (auto& ui : u_pred) {
            const double ni = norm(ui);
            if (ni > cfg.u_max) {
                const double s = cfg.u_max / ni;
                for (double& v : ui) v *= s;
            }
        }
    }

    DeepcSolution sol;
    sol.nu = nu;
    sol.u_pred = u_pred;
    sol.y_pred = unstack(y_fut * nu, p);
    sol.objective = 0.0;
    for (std::size_t i = 0; i < big_n; ++i) {
        Vector dy = sol.y_pred[i];
        for (std::size_t j = 0; j < p; ++j) dy[j] -= y_ref_window[i][j];
        sol.objective += dot(dy, cfg.q * dy) + dot(sol.u_pred[i], cfg.r * sol.u_pred[i]);
    }
    return sol;
}

DeepcController::DeepcController(HankelStack stack, DeepcConfig cfg, ReferenceFn y_ref)
    : stack_(std::move(stack)), cfg_(std::move(cfg)), y_ref_(std::move(y_ref)) {
    cfg_.validate(stack_.input_dim());
    if (stack_.depth != cfg_.horizon + cfg_.past_window(stack_.input_dim()))
        throw InvalidInput("DeepcController: stack depth must equal N + 2m");
    u_now_ = Vector(stack_.input_dim(), 0.0);
}

Vector DeepcController::step(const Vector& y_now) {
    const std::size_t m = stack_.input_dim();
    const std::size_t past = cfg_.past_window(m);
    history_.emplace_back(u_now_, y_now);
    while (history_.size() > past) history_.pop_front();

    Vector u_next(m, 0.0);
    if (history_.size() == past) {
        std::vector<Vector> u_past, y_past, refs;
        for (const auto& [u, y] : history_) {
            u_past.push_back(u);
            y_past.push_back(y);
        }
        for (std::size_t i = 1; i <= cfg_.horizon; ++i) refs.push_back(y_ref_(k_ + i));
        last_ = deepc_step(stack_, u_past, y_past, refs, cfg_);
        u_next = last_->u_pred.front();
    }
    ++k_;
    u_now_ = u_next;
    return u_next;
}

}  // namespace sdpc
