#pragma once

#include <deque>
#include <functional>
#include <string>

#include "sdpc/matrix.hpp"
#include "sdpc/system.hpp"

namespace sdpc {

/// Time-varying error margin sigma; the admissible tracking-error radius is
/// 1/sigma(t). Must stay bounded away from zero.
struct FunnelFunction {
    std::function<double(double)> sigma;
    std::string tag = "custom";

    double operator()(double t) const { return sigma(t); }
    double radius(double t) const { return 1.0 / sigma(t); }
};

FunnelFunction constant_funnel(double sigma_value);

/// The margin used by the Van der Pol benchmark scenarios: radius 2.3 up to
/// t = 4, then exponentially shrinking to 0.3.
double benchmark_sigma(double t);
FunnelFunction benchmark_funnel();

/// Auxiliary error variables of the feedback law:
///   e1 = sigma*(y - y_ref),  e2 = sigma*(dy - dy_ref) + e1/(1 - |e1|^2).
struct ErrorState {
    Vector e;
    Vector de;
    Vector e1;
    Vector e2;
};

ErrorState error_vars(double t, const Vector& y, const Vector& dy, const Vector& y_ref,
                      const Vector& dy_ref, const FunnelFunction& sigma);

/// High-gain feedback u_fc = -e2 / (1 - |e2|^2).
Vector funnel_feedback(const Vector& e2);

/// Two-component combination u = mu + a * u_fc.
Vector combine(const Vector& mu, double a, const Vector& ufc);

/// Sliding window over (time, |e2|) samples realizing
///   a_tau(t) = max{0, max_{s in [t-tau, t]} |e2(s)| - lambda}.
/// Samples are pruned once strictly older than t - tau. Time must not run
/// backwards across updates.
class ActivationWindow {
public:
    ActivationWindow(double tau, double lambda);

    /// Records (t, e2_norm) and returns the activation gain at t.
    double activation(double t, double e2_norm);

    double tau() const { return tau_; }
    double threshold() const { return lambda_; }
    std::size_t sample_count() const { return samples_.size(); }

private:
    double tau_;
    double lambda_;
    std::deque<std::pair<double, double>> samples_;
};

/// Reference signal handed to both controller components.
struct ReferenceSignal {
    std::function<Vector(double)> y;
    std::function<Vector(double)> dy;
};

/// The safeguarded two-component controller: u = mu + a_tau * u_fc, with the
/// funnel feedback computed from y = x1, dy = x2 read off the state.
///
/// Modes:
///  - default: a_tau from the activation window (safeguard on demand)
///  - always_active: a = 1 (plain funnel control, used for data-collection
///    reference tracking)
///  - safeguard off: a = 0; boundary crossings are recorded instead of thrown
///    (negative-control runs).
class TwoComponentController {
public:
    struct Options {
        double lambda = 0.75;
        double tau = 0.025;
        bool safeguard = true;
        bool always_active = false;
    };

    using MuFn = std::function<Vector(double, const Vector&)>;

    TwoComponentController(FunnelFunction sigma, ReferenceSignal ref, MuFn mu, Options opt);

    ControlSample operator()(double t, const Vector& x);

    /// Largest activation gain seen since the last reset_interval().
    double interval_activation_max() const { return interval_max_a_; }
    void reset_interval() { interval_max_a_ = 0.0; }

    std::size_t violation_count() const { return violations_; }
    double first_violation_time() const { return first_violation_t_; }

private:
    FunnelFunction sigma_;
    ReferenceSignal ref_;
    MuFn mu_;
    Options opt_;
    ActivationWindow window_;
    double interval_max_a_ = 0.0;
    std::size_t violations_ = 0;
    double first_violation_t_ = -1.0;
};

}  // namespace sdpc
