#include "sdpc/funnel.hpp"

#include <cmath>

namespace sdpc {

namespace {
// Margin below 1.0 at which e1/e2 are treated as a boundary hit. Exact
// arithmetic keeps both strictly below 1; reaching this indicates the
// integration is under-resolved.
constexpr double kBoundaryGuard = 1.0 - 1e-9;
}  // namespace

FunnelFunction constant_funnel(double sigma_value) {
    if (!(sigma_value > 0.0)) throw InvalidInput("constant_funnel: sigma must be positive");
    return FunnelFunction{[sigma_value](double) { return sigma_value; }, "constant"};
}

double benchmark_sigma(double t) {
    if (t <= 4.0) return 1.0 / 2.3;
    return 1.0 / (2.0 * std::exp(-2.0 * (t - 4.0)) + 0.3);
}

FunnelFunction benchmark_funnel() {
    return FunnelFunction{[](double t) { return benchmark_sigma(t); }, "benchmark"};
}

ErrorState error_vars(double t, const Vector& y, const Vector& dy, const Vector& y_ref,
                      const Vector& dy_ref, const FunnelFunction& sigma) {
    const double s = sigma(t);
    if (!(s > 0.0)) throw InvalidInput("error_vars: sigma must be positive");
    ErrorState es;
    es.e = vsub(y, y_ref);
    es.de = vsub(dy, dy_ref);
    es.e1 = vscale(s, es.e);
    const double n1 = norm(es.e1);
    if (n1 >= kBoundaryGuard)
        throw FunnelViolation("error_vars: tracking error reached the funnel boundary", t, n1,
                              std::nan(""));
    es.e2 = vscale(s, es.de);
    vaxpy(1.0 / (1.0 - n1 * n1), es.e1, es.e2);
    return es;
}

Vector funnel_feedback(const Vector& e2) {
    const double n2 = norm(e2);
    if (n2 >= kBoundaryGuard)
        throw FunnelViolation("funnel_feedback: auxiliary error reached its boundary",
                              std::nan(""), std::nan(""), n2);
    return vscale(-1.0 / (1.0 - n2 * n2), e2);
}

Vector combine(const Vector& mu, double a, const Vector& ufc) {
    if (!all_finite(mu) || !all_finite(ufc) || !std::isfinite(a))
        throw InvalidInput("combine: non-finite input");
    Vector u = mu;
    vaxpy(a, ufc, u);
    return u;
}

ActivationWindow::ActivationWindow(double tau, double lambda) : tau_(tau), lambda_(lambda) {
    if (!(tau > 0.0)) throw InvalidInput("ActivationWindow: tau must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidInput("ActivationWindow: lambda in (0,1)");
}

double ActivationWindow::activation(double t, double e2_norm) {
    if (!samples_.empty() && t < samples_.back().first - 1e-12)
        throw InvalidInput("ActivationWindow: time ran backwards");
    samples_.emplace_back(t, e2_norm);
    while (!samples_.empty() && samples_.front().first < t - tau_) samples_.pop_front();
    double peak = 0.0;
    for (const auto& [ts, v] : samples_) peak = std::max(peak, v);
    return std::max(0.0, peak - lambda_);
}

TwoComponentController::TwoComponentController(FunnelFunction sigma, ReferenceSignal ref, MuFn mu,
                                               Options opt)
    : sigma_(std::move(sigma)),
      ref_(std::move(ref)),
      mu_(std::move(mu)),
      opt_(opt),
      window_(opt.tau, opt.lambda) {}

ControlSample TwoComponentController::operator()(double t, const Vector& x) {
    const std::size_t m = x.size() / 2;
    const Vector y(x.begin(), x.begin() + m);
    const Vector dy(x.begin() + m, x.end());
    const Vector yr = ref_.y(t);
    const Vector dyr = ref_.dy(t);
    Vector mu = mu_ ? mu_(t, x) : Vector(m, 0.0);

    if (!opt_.safeguard) {
        // Negative-control mode: diagnostics only, crossings recorded.
        const double s = sigma_(t);
        const double n1 = s * norm(vsub(y, yr));
        Vector ufc(m, 0.0);
        if (n1 >= 1.0) {
            ++violations_;
            if (first_violation_t_ < 0.0) first_violation_t_ = t;
        } else {
            ErrorState es;
            es.e1 = vscale(s, vsub(y, yr));
            es.e2 = vscale(s, vsub(dy, dyr));
            vaxpy(1.0 / (1.0 - n1 * n1), es.e1, es.e2);
            if (norm(es.e2) < kBoundaryGuard) ufc = funnel_feedback(es.e2);
        }
        return ControlSample{mu, mu, ufc, 0.0};
    }

    ErrorState es = error_vars(t, y, dy, yr, dyr, sigma_);
    double a;
    if (opt_.always_active) {
        a = 1.0;
    } else {
        a = window_.activation(t, norm(es.e2));
    }
    interval_max_a_ = std::max(interval_max_a_, a);
    Vector ufc = funnel_feedback(es.e2);
    return ControlSample{combine(mu, a, ufc), std::move(mu), std::move(ufc), a};
}

}  // namespace sdpc
