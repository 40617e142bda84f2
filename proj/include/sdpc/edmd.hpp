#pragma once

#include <string>

#include "sdpc/matrix.hpp"
#include "sdpc/system.hpp"

namespace sdpc {

/// Monomial observable dictionary. Ordering: the constant observable first,
/// then by total degree, lexicographically (descending exponent tuples)
/// within a degree. This places the coordinate observables at indices 1..n.
struct Dictionary {
    std::size_t n = 0;
    std::vector<std::vector<unsigned>> exponents;    // one tuple per observable
    std::vector<std::size_t> coordinate_rows;        // rows reproducing x

    std::size_t size() const { return exponents.size(); }  // M + 1
    Vector evaluate(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;          // (M+1) x n

    /// Selects the coordinate-observable rows of a lifted vector: exact state
    /// recovery for lifted points of the form Psi(x).
    Vector reproject(const Vector& lifted) const;
};

Dictionary make_monomial_dictionary(std::size_t n, unsigned max_degree);

/// Snapshot pairs (x_i, x_i^+) gathered under one constant input over
/// intervals of length dt.
struct SnapshotSet {
    std::vector<Vector> x;
    std::vector<Vector> x_next;
    Vector input;
    double dt = 0.0;

    std::size_t count() const { return x.size(); }
    void append(const Vector& xi, const Vector& xni);
};

/// Least-squares lifted operator K = Psi_{X+} * pinv(Psi_X), minimizing the
/// Frobenius residual |Psi_{X+} - K Psi_X|_F. Warns on stderr when the data
/// matrix is rank deficient (e.g. repeated samples); the fit still proceeds.
Matrix edmd_fit(const SnapshotSet& snap, const Dictionary& dict, double tol = 1e-10);

/// Bilinear lifted model: K_u = K0 + sum_i u_i (K_i - K0), with K0 fit from
/// zero-input data and K_i from unit-input data, all on a common dt.
struct BilinearSurrogate {
    Matrix k0;
    std::vector<Matrix> ki;
    double dt = 0.0;
    Dictionary dict;

    // Coordinate-row slices of the operators, kept for cheap stepping.
    Matrix r0;                 // n x (M+1)
    std::vector<Matrix> ri;

    std::size_t state_dim() const { return dict.n; }
    std::size_t input_dim() const { return ki.size(); }

    Vector step(const Vector& x, const Vector& u) const;
    /// d step / d x at (x, u): S K_u DPsi(x).
    Matrix state_jacobian(const Vector& x, const Vector& u) const;
    /// d step / d u at x: columns S (K_i - K0) Psi(x).
    Matrix input_jacobian(const Vector& x) const;
};

BilinearSurrogate fit_bilinear(const SnapshotSet& snap0, const std::vector<SnapshotSet>& snaps,
                               const Dictionary& dict, double tol = 1e-10);

Vector surrogate_step(const BilinearSurrogate& sur, const Vector& x, const Vector& u);

/// Creates the m+1 empty snapshot sets for inputs {0, e_1, ..., e_m}.
std::vector<SnapshotSet> make_snapshot_sets(std::size_t n, std::size_t m, double dt);

/// Routes one sampling-interval triplet into `sets` (layout as produced by
/// make_snapshot_sets). Discards it when the safeguard was active anywhere in
/// the interval (activation_max > 0) or the constant input matches neither 0
/// nor a unit vector. Returns whether the triplet was stored.
bool route_snapshot(std::vector<SnapshotSet>& sets, const Vector& x, const Vector& u,
                    const Vector& x_next, double activation_max);

/// Post-processing collection from a logged trajectory: keeps only sampling
/// intervals of length dt on which the activation gain was identically zero
/// and the applied input was constant at 0 or a unit vector.
std::vector<SnapshotSet> collect_online(const Trajectory& traj, double dt);

void save_snapshots_csv(const std::string& path, const std::vector<SnapshotSet>& sets);
std::vector<SnapshotSet> load_snapshots_csv(const std::string& path, std::size_t n, std::size_t m);

}  // namespace sdpc
