#pragma once

#include <string>
#include <utility>

#include "sdpc/funnel.hpp"
#include "sdpc/matrix.hpp"
#include "sdpc/system.hpp"

namespace sdpc {

/// Compactly supported Wendland kernel of smoothness degree k on R^n, with
/// profile taken at the scaled radius |x - y| / support_radius. Positive
/// definite on R^n for the implemented (n, k) table (k in {1, 2}).
struct WendlandKernel {
    std::size_t dimension = 0;
    unsigned smoothness = 0;
    double support_radius = 1.0;

    static WendlandKernel make(std::size_t n, unsigned k, double support_radius);

    unsigned ell() const { return static_cast<unsigned>(dimension / 2) + smoothness + 1; }

    /// Radial profile at scaled radius r >= 0; 1 at r = 0, 0 for r >= 1.
    double profile(double r) const;

    double operator()(const Vector& a, const Vector& b) const;
};

double wendland_eval(const WendlandKernel& kernel, double r);

struct FillDistanceResult {
    double value = 0.0;
    Vector witness;            // grid point attaining the max-min distance
    double certification = 0.0;  // half grid-cell diagonal: true sup-min is in
                                 // [value, value + certification]
};

/// Grid approximation of sup_{x in box} min_i |x - x_i| with `resolution`
/// points per axis (inclusive of the box faces).
FillDistanceResult fill_distance(const std::vector<Vector>& samples, const Vector& lo,
                                 const Vector& hi, std::size_t resolution = 200);

/// Data triplets attached to one virtual-observation point.
struct ClusterData {
    Vector center;
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<Vector> successors;

    std::size_t count() const { return states.size(); }
};

/// Frobenius-optimal estimate of (g0(center), G(center)) from the cluster's
/// triplets: [g0, G] = [x+ ...] * pinv([1 ...; u ...]). Requires at least m+1
/// triplets whose input block has rank m.
std::pair<Vector, Matrix> cluster_regression(const ClusterData& cluster);

struct VirtualObservationSet {
    std::vector<ClusterData> clusters;
    double cluster_radius = 0.0;

    static VirtualObservationSet make(std::vector<ClusterData> clusters, double cluster_radius);
    std::size_t size() const { return clusters.size(); }
    std::vector<Vector> centers() const;
};

/// Kernel-interpolated control-affine surrogate
///   F(x, u) = g0(x) + sum_j gj(x) u_j,
/// where each gj interpolates the per-cluster regression estimates at the
/// virtual-observation points.
struct KernelSurrogate {
    std::vector<Vector> points;
    WendlandKernel kernel;
    std::vector<Matrix> coefficients;      // per j in [0:m]: d x n coefficient matrix
    std::vector<Vector> g0_estimates;      // per-point regression results
    std::vector<Matrix> g_input_estimates;

    std::size_t state_dim() const { return points.front().size(); }
    std::size_t input_dim() const { return coefficients.size() - 1; }

    Vector kernel_features(const Vector& x) const;  // (k(x_i, x))_i
    Vector drift(const Vector& x) const;
    Matrix input_map(const Vector& x) const;        // n x m
    Vector step(const Vector& x, const Vector& u) const;
};

KernelSurrogate fit_kernel_surrogate(const VirtualObservationSet& vos,
                                     const WendlandKernel& kernel);

/// Reference plan threading the virtual-observation points: a cubic Hermite
/// spline through (position, velocity) knots at times i*dt, plus the constant
/// error margin sigma >= 3/eps_c that confines the tracked state to the
/// eps_c-ball of each point at its knot time.
struct SamplingPlan {
    std::vector<double> knot_times;
    std::vector<Vector> knots;     // full state (position block, velocity block)
    double dt = 0.0;
    double eps_c = 0.0;
    double sigma = 0.0;
    std::vector<std::pair<double, double>> acceptance_windows;  // per knot

    std::size_t output_dim() const { return knots.front().size() / 2; }
    double duration() const { return knot_times.back(); }
    Vector y_ref(double t) const;
    Vector dy_ref(double t) const;
    /// Max |d2y/dt2| sampled on a fine grid (finite second differences).
    double second_derivative_bound(std::size_t samples_per_segment = 64) const;
};

SamplingPlan plan_reference(const std::vector<Vector>& points, double dt, double eps_c,
                            double sigma_floor = 0.0);

/// Runs the plan on a system under pure funnel feedback (activation fixed at
/// 1) with the plan's constant margin, starting at the first knot. Returns
/// the distance of the state to each knot's virtual point at its knot time.
std::vector<double> track_plan(const ControlAffineSystem& sys, const SamplingPlan& plan,
                               int substeps);

void save_vos_csv(const std::string& path, const VirtualObservationSet& vos);
VirtualObservationSet load_vos_csv(const std::string& path, std::size_t n, std::size_t m);
void save_plan_csv(const std::string& path, const SamplingPlan& plan);

}  // namespace sdpc
