#include "sdpc/kedmd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdpc/svd.hpp"

namespace sdpc {

WendlandKernel WendlandKernel::make(std::size_t n, unsigned k, double support_radius) {
    if (n < 1) throw InvalidInput("WendlandKernel: dimension must be >= 1");
    if (k != 1 && k != 2)
        throw UnsupportedKernel("WendlandKernel: smoothness degree must be 1 or 2");
    if (!(support_radius > 0.0)) throw InvalidInput("WendlandKernel: radius must be positive");
    return WendlandKernel{n, k, support_radius};
}

double WendlandKernel::profile(double r) const {
    if (r < 0.0) throw InvalidInput("WendlandKernel: negative radius");
    if (r >= 1.0) return 0.0;
    const double l = static_cast<double>(ell());
    const double one_minus = 1.0 - r;
    if (smoothness == 1) {
        return std::pow(one_minus, l + 1.0) * ((l + 1.0) * r + 1.0);
    }
    // k = 2, normalized to 1 at r = 0.
    const double poly = (l * l + 4.0 * l + 3.0) * r * r + (3.0 * l + 6.0) * r + 3.0;
    return std::pow(one_minus, l + 2.0) * poly / 3.0;
}

double WendlandKernel::operator()(const Vector& a, const Vector& b) const {
    if (a.size() != dimension || b.size() != dimension)
        throw InvalidInput("WendlandKernel: point dimension mismatch");
    return profile(norm(vsub(a, b)) / support_radius);
}

double wendland_eval(const WendlandKernel& kernel, double r) { return kernel.profile(r); }

FillDistanceResult fill_distance(const std::vector<Vector>& samples, const Vector& lo,
                                 const Vector& hi, std::size_t resolution) {
    if (samples.empty()) throw InvalidInput("fill_distance: no samples");
    if (resolution < 2) throw InvalidInput("fill_distance: resolution must be >= 2");
    const std::size_t n = lo.size();
    if (hi.size() != n) throw InvalidInput("fill_distance: box dimension mismatch");
    for (const auto& s : samples)
        if (s.size() != n) throw InvalidInput("fill_distance: sample dimension mismatch");

    Vector spacing(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(hi[i] >= lo[i])) throw InvalidInput("fill_distance: empty box");
        spacing[i] = (hi[i] - lo[i]) / static_cast<double>(resolution - 1);
    }

    FillDistanceResult result;
    result.certification = 0.5 * norm(spacing);

    std::vector<std::size_t> idx(n, 0);
    Vector point(n);
    while (true) {
        for (std::size_t i = 0; i < n; ++i) point[i] = lo[i] + spacing[i] * idx[i];
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : samples) best = std::min(best, norm(vsub(point, s)));
        if (best > result.value) {
            result.value = best;
            result.witness = point;
        }
        std::size_t axis = 0;
        while (axis < n && ++idx[axis] == resolution) idx[axis++] = 0;
        if (axis == n) break;
    }
    return result;
}

std::pair<Vector, Matrix> cluster_regression(const ClusterData& cluster) {
    const std::size_t d = cluster.count();
    if (d == 0) throw InvalidInput("cluster_regression: empty cluster");
    const std::size_t m = cluster.inputs.front().size();
    const std::size_t n = cluster.successors.front().size();
    if (d < m + 1)
        throw RankDeficientInputs("cluster_regression: need at least m+1 triplets");

    Matrix ublock(m, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < m; ++i) ublock(i, j) = cluster.inputs[j][i];
    if (numerical_rank(ublock, 1e-10) != m)
        throw RankDeficientInputs("cluster_regression: input block rank below m");

    Matrix u(1 + m, d);
    for (std::size_t j = 0; j < d; ++j) {
        u(0, j) = 1.0;
        for (std::size_t i = 0; i < m; ++i) u(1 + i, j) = cluster.inputs[j][i];
    }
    if (numerical_rank(u, 1e-10) != 1 + m)
        throw RankDeficientInputs("cluster_regression: constant and input rows are dependent");

    Matrix rhs(n, d);
    for (std::size_t j = 0; j < d; ++j) rhs.set_column(j, cluster.successors[j]);
    const Matrix h = rhs * pseudo_inverse(u);

    Vector g0 = h.column(0);
    Matrix g(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g(i, j) = h(i, 1 + j);
    return {g0, g};
}

VirtualObservationSet VirtualObservationSet::make(std::vector<ClusterData> clusters,
                                                  double cluster_radius) {
    if (clusters.empty()) throw InvalidInput("VirtualObservationSet: no clusters");
    if (!(cluster_radius > 0.0)) throw InvalidInput("VirtualObservationSet: radius must be positive");
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        for (std::size_t j = i + 1; j < clusters.size(); ++j)
            if (norm(vsub(clusters[i].center, clusters[j].center)) < 1e-12)
                throw InvalidInput("VirtualObservationSet: duplicate virtual points");
        for (const auto& s : clusters[i].states)
            if (norm(vsub(s, clusters[i].center)) > cluster_radius + 1e-12)
                throw InvalidInput("VirtualObservationSet: cluster member outside its ball");
    }
    VirtualObservationSet vos;
    vos.clusters = std::move(clusters);
    vos.cluster_radius = cluster_radius;
    return vos;
}

std::vector<Vector> VirtualObservationSet::centers() const {
    std::vector<Vector> c;
    c.reserve(clusters.size());
    for (const auto& cl : clusters) c.push_back(cl.center);
    return c;
}

Vector KernelSurrogate::kernel_features(const Vector& x) const {
    Vector f(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) f[i] = kernel(points[i], x);
    return f;
}

Vector KernelSurrogate::drift(const Vector& x) const {
    return transpose(coefficients[0]) * kernel_features(x);
}

Matrix KernelSurrogate::input_map(const Vector& x) const {
    const Vector f = kernel_features(x);
    std::vector<Vector> cols;
    for (std::size_t j = 1; j < coefficients.size(); ++j)
        cols.push_back(transpose(coefficients[j]) * f);
    return Matrix::from_columns(cols);
}

Vector KernelSurrogate::step(const Vector& x, const Vector& u) const {
    if (u.size() != input_dim()) throw InvalidInput("KernelSurrogate::step: input size");
    const Vector f = kernel_features(x);
    Vector out = transpose(coefficients[0]) * f;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j] == 0.0) continue;
        vaxpy(u[j], transpose(coefficients[1 + j]) * f, out);
    }
    return out;
}

KernelSurrogate fit_kernel_surrogate(const VirtualObservationSet& vos,
                                     const WendlandKernel& kernel) {
    const std::size_t d = vos.size();
    const std::vector<Vector> pts = vos.centers();
    const std::size_t n = pts.front().size();

    Matrix gram(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) gram(i, j) = kernel(pts[i], pts[j]);

    // Jitter keeps the factorization of near-singular Gram matrices alive;
    // interpolation accuracy is restored by iterative refinement below.
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += gram(i, i);
    const double jitter = 1e-10 * trace / static_cast<double>(d);
    Matrix gram_j = gram;
    for (std::size_t i = 0; i < d; ++i) gram_j(i, i) += jitter;

    const SvdFactorization svd = jacobi_svd(gram_j);
    const double cond = svd.singular_values.front() /
                        std::max(svd.singular_values.back(), 1e-300);
    if (cond > 1e12)
        throw ConditioningError(
            "fit_kernel_surrogate: Gram matrix condition above 1e12; enlarge the support radius "
            "or thin the points");
    auto chol = cholesky_factor(gram_j);
    if (!chol)
        throw ConditioningError("fit_kernel_surrogate: Gram matrix not positive definite");

    KernelSurrogate sur;
    sur.points = pts;
    sur.kernel = kernel;

    const std::size_t m = vos.clusters.front().inputs.front().size();
    std::vector<Matrix> targets(1 + m, Matrix(d, n));  // rows: per-point estimates
    for (std::size_t i = 0; i < d; ++i) {
        auto [g0, g] = cluster_regression(vos.clusters[i]);
        sur.g0_estimates.push_back(g0);
        sur.g_input_estimates.push_back(g);
        targets[0].set_row(i, g0);
        for (std::size_t j = 0; j < m; ++j) targets[1 + j].set_row(i, g.column(j));
    }

    for (std::size_t j = 0; j < 1 + m; ++j) {
        Matrix coeff(d, n);
        for (std::size_t col = 0; col < n; ++col) {
            const Vector rhs = targets[j].column(col);
            Vector c = cholesky_solve(*chol, rhs);
            for (int refine = 0; refine < 2; ++refine) {
                Vector res = vsub(rhs, gram * c);
                vaxpy(1.0, cholesky_solve(*chol, res), c);
            }
            coeff.set_column(col, c);
        }
        sur.coefficients.push_back(std::move(coeff));
    }
    return sur;
}

namespace {

// Cubic Hermite basis on [0, 1].
inline void hermite(double s, double& h00, double& h10, double& h01, double& h11) {
    const double s2 = s * s, s3 = s2 * s;
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    h10 = s3 - 2.0 * s2 + s;
    h01 = -2.0 * s3 + 3.0 * s2;
    h11 = s3 - s2;
}

inline void hermite_d(double s, double& d00, double& d10, double& d01, double& d11) {
    const double s2 = s * s;
    d00 = 6.0 * s2 - 6.0 * s;
    d10 = 3.0 * s2 - 4.0 * s + 1.0;
    d01 = -6.0 * s2 + 6.0 * s;
    d11 = 3.0 * s2 - 2.0 * s;
}

}  // namespace

Vector SamplingPlan::y_ref(double t) const {
    const std::size_t m = output_dim();
    if (knots.size() == 1) {
        Vector p(knots[0].begin(), knots[0].begin() + m);
        vaxpy(t, Vector(knots[0].begin() + m, knots[0].end()), p);
        return p;
    }
    const double tc = std::clamp(t, 0.0, duration());
    auto seg = std::min<std::size_t>(static_cast<std::size_t>(tc / dt), knots.size() - 2);
    const double s = (tc - knot_times[seg]) / dt;
    double h00, h10, h01, h11;
    hermite(s, h00, h10, h01, h11);
    Vector out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double p0 = knots[seg][i], v0 = knots[seg][m + i];
        const double p1 = knots[seg + 1][i], v1 = knots[seg + 1][m + i];
        out[i] = h00 * p0 + h10 * dt * v0 + h01 * p1 + h11 * dt * v1;
    }
    return out;
}

Vector SamplingPlan::dy_ref(double t) const {
    const std::size_t m = output_dim();
    if (knots.size() == 1) return Vector(knots[0].begin() + m, knots[0].end());
    const double tc = std::clamp(t, 0.0, duration());
    auto seg = std::min<std::size_t>(static_cast<std::size_t>(tc / dt), knots.size() - 2);
    const double s = (tc - knot_times[seg]) / dt;
    double d00, d10, d01, d11;
    hermite_d(s, d00, d10, d01, d11);
    Vector out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double p0 = knots[seg][i], v0 = knots[seg][m + i];
        const double p1 = knots[seg + 1][i], v1 = knots[seg + 1][m + i];
        out[i] = (d00 * p0 + d10 * dt * v0 + d01 * p1 + d11 * dt * v1) / dt;
    }
    return out;
}

double SamplingPlan::second_derivative_bound(std::size_t samples_per_segment) const {
    if (knots.size() < 2) return 0.0;
    double bound = 0.0;
    const double h = dt / static_cast<double>(samples_per_segment);
    for (double t = h; t + h <= duration() + 1e-12; t += h) {
        const Vector a = dy_ref(t - h);
        const Vector b = dy_ref(t + h);
        bound = std::max(bound, norm(vsub(b, a)) / (2.0 * h));
    }
    return bound;
}

SamplingPlan plan_reference(const std::vector<Vector>& points, double dt, double eps_c,
                            double sigma_floor) {
    if (points.empty()) throw InvalidInput("plan_reference: no points");
    if (!(dt > 0.0) || !(eps_c > 0.0))
        throw InvalidInput("plan_reference: dt and eps_c must be positive");
    const std::size_t dim = points.front().size();
    if (dim % 2 != 0) throw InvalidInput("plan_reference: points must stack (position, velocity)");
    const std::size_t m = dim / 2;

    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const Vector p0(points[i].begin(), points[i].begin() + m);
        const Vector p1(points[i + 1].begin(), points[i + 1].begin() + m);
        const Vector v0(points[i].begin() + m, points[i].end());
        const Vector v1(points[i + 1].begin() + m, points[i + 1].end());
        if (norm(vsub(p0, p1)) < 1e-12 && norm(vsub(v0, v1)) > 1e-12)
            throw InfeasibleSpline("plan_reference: duplicate knot positions with conflicting velocities");
    }

    SamplingPlan plan;
    plan.dt = dt;
    plan.eps_c = eps_c;
    plan.sigma = std::max(3.0 / eps_c, sigma_floor);
    plan.knots = points;
    for (std::size_t i = 0; i < points.size(); ++i)
        plan.knot_times.push_back(static_cast<double>(i) * dt);

    // Acceptance window per knot: times where the reference state plus the
    // tracking tube of radius 3/sigma stays inside the eps_c-ball.
    const double slack = eps_c - 3.0 / plan.sigma;  // >= 0 by construction
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double t_i = plan.knot_times[i];
        double lo = t_i, hi = t_i;
        const double step = dt / 64.0;
        while (lo - step >= std::max(0.0, t_i - dt)) {
            Vector ref = plan.y_ref(lo - step);
            ref.insert(ref.end(), m, 0.0);
            Vector dref = plan.dy_ref(lo - step);
            for (std::size_t q = 0; q < m; ++q) ref[m + q] = dref[q];
            if (norm(vsub(ref, points[i])) > slack) break;
            lo -= step;
        }
        while (hi + step <= std::min(plan.duration(), t_i + dt)) {
            Vector ref = plan.y_ref(hi + step);
            Vector dref = plan.dy_ref(hi + step);
            ref.insert(ref.end(), dref.begin(), dref.end());
            if (norm(vsub(ref, points[i])) > slack) break;
            hi += step;
        }
        plan.acceptance_windows.emplace_back(lo, hi);
    }
    return plan;
}

std::vector<double> track_plan(const ControlAffineSystem& sys, const SamplingPlan& plan,
                               int substeps) {
    if (sys.m != plan.output_dim()) throw InvalidInput("track_plan: dimension mismatch");
    ReferenceSignal ref{[&plan](double t) { return plan.y_ref(t); },
                        [&plan](double t) { return plan.dy_ref(t); }};
    TwoComponentController ctrl(constant_funnel(plan.sigma), ref, nullptr,
                                TwoComponentController::Options{0.75, plan.dt / 2.0, true, true});

    Vector x = plan.knots.front();
    std::vector<double> distances;
    distances.push_back(norm(vsub(x, plan.knots[0])));
    for (std::size_t i = 0; i + 1 < plan.knots.size(); ++i) {
        x = integrate_interval(sys, std::ref(ctrl), plan.knot_times[i], x, plan.dt, substeps);
        distances.push_back(norm(vsub(x, plan.knots[i + 1])));
    }
    return distances;
}

void save_vos_csv(const std::string& path, const VirtualObservationSet& vos) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("save_vos_csv: cannot open " + path);
    const std::size_t n = vos.clusters.front().center.size();
    const std::size_t m = vos.clusters.front().inputs.front().size();
    out << "# vos-csv-v1\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", vos.cluster_radius);
    out << "# eps_c = " << buf << "\n";
    for (std::size_t i = 0; i < n; ++i) out << "c" << i + 1 << ",";
    for (std::size_t i = 0; i < n; ++i) out << "x" << i + 1 << ",";
    for (std::size_t i = 0; i < m; ++i) out << "u" << i + 1 << ",";
    for (std::size_t i = 0; i < n; ++i) out << "xp" << i + 1 << (i + 1 < n ? "," : "\n");
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << sep;
    };
    for (const auto& cl : vos.clusters) {
        for (std::size_t j = 0; j < cl.count(); ++j) {
            for (double v : cl.center) put(v, ',');
            for (double v : cl.states[j]) put(v, ',');
            for (double v : cl.inputs[j]) put(v, ',');
            for (std::size_t i = 0; i < n; ++i) put(cl.successors[j][i], i + 1 < n ? ',' : '\n');
        }
    }
}

VirtualObservationSet load_vos_csv(const std::string& path, std::size_t n, std::size_t m) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("load_vos_csv: cannot open " + path);
    std::string line;
    double eps_c = 0.0;
    std::vector<ClusterData> clusters;
    while (std::getline(in, line)) {
        if (line.rfind("# eps_c =", 0) == 0) {
            eps_c = std::stod(line.substr(9));
            continue;
        }
        if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
        std::stringstream ss(line);
        std::vector<double> vals;
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 3 * n + m) throw InvalidInput("load_vos_csv: wrong column count");
        Vector center(vals.begin(), vals.begin() + n);
        Vector state(vals.begin() + n, vals.begin() + 2 * n);
        Vector input(vals.begin() + 2 * n, vals.begin() + 2 * n + m);
        Vector succ(vals.begin() + 2 * n + m, vals.end());
        auto it = std::find_if(clusters.begin(), clusters.end(), [&](const ClusterData& c) {
            return norm(vsub(c.center, center)) < 1e-12;
        });
        if (it == clusters.end()) {
            clusters.push_back(ClusterData{center, {}, {}, {}});
            it = clusters.end() - 1;
        }
        it->states.push_back(state);
        it->inputs.push_back(input);
        it->successors.push_back(succ);
    }
    return VirtualObservationSet::make(std::move(clusters), eps_c);
}

void save_plan_csv(const std::string& path, const SamplingPlan& plan) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("save_plan_csv: cannot open " + path);
    const std::size_t m = plan.output_dim();
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# sampling-plan-v1\n";
    out << "# dt = " << fmt(plan.dt) << "\n";
    out << "# eps_c = " << fmt(plan.eps_c) << "\n";
    out << "# sigma = " << fmt(plan.sigma) << "\n";
    out << "t,";
    for (std::size_t i = 0; i < m; ++i) out << "p" << i + 1 << ",";
    for (std::size_t i = 0; i < m; ++i) out << "v" << i + 1 << ",";
    out << "window_lo,window_hi\n";
    for (std::size_t k = 0; k < plan.knots.size(); ++k) {
        out << fmt(plan.knot_times[k]) << ",";
        for (double v : plan.knots[k]) out << fmt(v) << ",";
        out << fmt(plan.acceptance_windows[k].first) << ","
            << fmt(plan.acceptance_windows[k].second) << "\n";
    }
}

}  // namespace sdpc
