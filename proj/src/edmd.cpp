#include "sdpc/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdpc/svd.hpp"

namespace sdpc {

namespace {

void enumerate_degree(std::size_t n, unsigned degree, std::vector<unsigned>& current,
                      std::size_t pos, std::vector<std::vector<unsigned>>& out) {
    if (pos + 1 == n) {
        current[pos] = degree;
        out.push_back(current);
        return;
    }
    // Descending first exponent gives descending-lexicographic order.
    for (int p = static_cast<int>(degree); p >= 0; --p) {
        current[pos] = static_cast<unsigned>(p);
        enumerate_degree(n, degree - p, current, pos + 1, out);
    }
}

bool inputs_match(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
    return true;
}

}  // namespace

Vector Dictionary::evaluate(const Vector& x) const {
    if (x.size() != n) throw InvalidInput("Dictionary::evaluate: state size mismatch");
    Vector psi(size(), 1.0);
    for (std::size_t j = 0; j < size(); ++j) {
        double v = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned p = exponents[j][i];
            for (unsigned q = 0; q < p; ++q) v *= x[i];
        }
        psi[j] = v;
    }
    return psi;
}

Matrix Dictionary::jacobian(const Vector& x) const {
    if (x.size() != n) throw InvalidInput("Dictionary::jacobian: state size mismatch");
    Matrix d(size(), n);
    for (std::size_t j = 0; j < size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned p = exponents[j][i];
            if (p == 0) continue;
            double v = static_cast<double>(p);
            for (unsigned q = 0; q + 1 < p; ++q) v *= x[i];
            for (std::size_t l = 0; l < n; ++l) {
                if (l == i) continue;
                const unsigned pl = exponents[j][l];
                for (unsigned q = 0; q < pl; ++q) v *= x[l];
            }
            d(j, i) = v;
        }
    }
    return d;
}

Vector Dictionary::reproject(const Vector& lifted) const {
    if (lifted.size() != size()) throw InvalidInput("Dictionary::reproject: size mismatch");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lifted[coordinate_rows[i]];
    return x;
}

Dictionary make_monomial_dictionary(std::size_t n, unsigned max_degree) {
    if (n < 1 || max_degree < 1)
        throw InvalidInput("make_monomial_dictionary: need n >= 1 and degree >= 1");
    Dictionary dict;
    dict.n = n;
    std::vector<unsigned> current(n, 0);
    for (unsigned deg = 0; deg <= max_degree; ++deg)
        enumerate_degree(n, deg, current, 0, dict.exponents);

    dict.coordinate_rows.assign(n, 0);
    for (std::size_t j = 0; j < dict.exponents.size(); ++j) {
        unsigned total = 0;
        for (unsigned p : dict.exponents[j]) total += p;
        if (total != 1) continue;
        for (std::size_t i = 0; i < n; ++i)
            if (dict.exponents[j][i] == 1) dict.coordinate_rows[i] = j;
    }
    return dict;
}

void SnapshotSet::append(const Vector& xi, const Vector& xni) {
    if (!x.empty() && (xi.size() != x.front().size() || xni.size() != x.front().size()))
        throw InvalidInput("SnapshotSet::append: dimension mismatch");
    x.push_back(xi);
    x_next.push_back(xni);
}

Matrix edmd_fit(const SnapshotSet& snap, const Dictionary& dict, double tol) {
    if (snap.count() == 0) throw InsufficientData("edmd_fit: empty snapshot set");
    const std::size_t d = snap.count();
    const std::size_t rows = dict.size();
    Matrix psi_x(rows, d), psi_xn(rows, d);
    for (std::size_t j = 0; j < d; ++j) {
        psi_x.set_column(j, dict.evaluate(snap.x[j]));
        psi_xn.set_column(j, dict.evaluate(snap.x_next[j]));
    }
    const std::size_t rank = numerical_rank(psi_x, tol);
    if (rank < std::min(rows, d))
        std::fprintf(stderr, "edmd_fit: rank-deficient data matrix (rank %zu of %zu)\n", rank,
                     std::min(rows, d));
    return psi_xn * pseudo_inverse(psi_x, tol);
}

Vector BilinearSurrogate::step(const Vector& x, const Vector& u) const {
    if (u.size() != input_dim()) throw InvalidInput("surrogate step: input size mismatch");
    const Vector psi = dict.evaluate(x);
    const Vector base = r0 * psi;
    Vector out = base;
    for (std::size_t i = 0; i < input_dim(); ++i) {
        if (u[i] == 0.0) continue;
        Vector di = ri[i] * psi;
        vaxpy(-1.0, base, di);
        vaxpy(u[i], di, out);
    }
    return out;
}

Matrix BilinearSurrogate::state_jacobian(const Vector& x, const Vector& u) const {
    Matrix ru = r0;
    for (std::size_t i = 0; i < input_dim(); ++i) {
        if (u[i] == 0.0) continue;
        ru = ru + u[i] * (ri[i] - r0);
    }
    return ru * dict.jacobian(x);
}

Matrix BilinearSurrogate::input_jacobian(const Vector& x) const {
    const Vector psi = dict.evaluate(x);
    std::vector<Vector> cols;
    cols.reserve(input_dim());
    for (std::size_t i = 0; i < input_dim(); ++i) cols.push_back((ri[i] - r0) * psi);
    return Matrix::from_columns(cols);
}

BilinearSurrogate fit_bilinear(const SnapshotSet& snap0, const std::vector<SnapshotSet>& snaps,
                               const Dictionary& dict, double tol) {
    const std::size_t m = snaps.size();
    if (norm(snap0.input) != 0.0) throw InvalidInput("fit_bilinear: snap0 must carry input 0");
    for (std::size_t i = 0; i < m; ++i) {
        Vector ei(m, 0.0);
        ei[i] = 1.0;
        if (!inputs_match(snaps[i].input, ei))
            throw InvalidInput("fit_bilinear: controlled set i must carry input e_i");
        if (std::abs(snaps[i].dt - snap0.dt) > 1e-12)
            throw InvalidInput("fit_bilinear: sampling times differ between snapshot sets");
    }

    BilinearSurrogate sur;
    sur.dt = snap0.dt;
    sur.dict = dict;
    sur.k0 = edmd_fit(snap0, dict, tol);
    for (std::size_t i = 0; i < m; ++i) sur.ki.push_back(edmd_fit(snaps[i], dict, tol));

    auto coord_rows = [&](const Matrix& k) {
        Matrix r(dict.n, dict.size());
        for (std::size_t i = 0; i < dict.n; ++i)
            r.set_row(i, k.row(dict.coordinate_rows[i]));
        return r;
    };
    sur.r0 = coord_rows(sur.k0);
    for (const Matrix& k : sur.ki) sur.ri.push_back(coord_rows(k));
    return sur;
}

Vector surrogate_step(const BilinearSurrogate& sur, const Vector& x, const Vector& u) {
    return sur.step(x, u);
}

std::vector<SnapshotSet> make_snapshot_sets(std::size_t n, std::size_t m, double dt) {
    std::vector<SnapshotSet> sets(m + 1);
    sets[0].input = Vector(m, 0.0);
    sets[0].dt = dt;
    for (std::size_t i = 0; i < m; ++i) {
        sets[i + 1].input = Vector(m, 0.0);
        sets[i + 1].input[i] = 1.0;
        sets[i + 1].dt = dt;
    }
    (void)n;
    return sets;
}

bool route_snapshot(std::vector<SnapshotSet>& sets, const Vector& x, const Vector& u,
                    const Vector& x_next, double activation_max) {
    if (activation_max > 0.0) return false;
    for (auto& set : sets) {
        if (inputs_match(u, set.input)) {
            set.append(x, x_next);
            return true;
        }
    }
    return false;  // silent discard: non-probe inputs are not used for fitting
}

std::vector<SnapshotSet> collect_online(const Trajectory& traj, double dt) {
    if (traj.inputs.empty()) throw InsufficientData("collect_online: empty trajectory");
    const double stride_f = dt / traj.dt_log;
    const auto stride = static_cast<std::size_t>(std::llround(stride_f));
    if (stride < 1 || std::abs(stride * traj.dt_log - dt) > 1e-9)
        throw InvalidInput("collect_online: dt must be a multiple of the log step");

    const std::size_t n = traj.states.front().size();
    const std::size_t m = traj.inputs.front().size();
    std::vector<SnapshotSet> sets = make_snapshot_sets(n, m, dt);

    const std::size_t intervals = traj.inputs.size() / stride;
    for (std::size_t k = 0; k < intervals; ++k) {
        bool clean = true;
        const Vector& u0 = traj.mu[k * stride];
        for (std::size_t j = k * stride; j < (k + 1) * stride && clean; ++j) {
            if (traj.a_tau[j] > 0.0) clean = false;
            if (!inputs_match(traj.mu[j], u0)) clean = false;
        }
        if (!clean) continue;
        route_snapshot(sets, traj.states[k * stride], u0, traj.states[(k + 1) * stride], 0.0);
    }
    return sets;
}

void save_snapshots_csv(const std::string& path, const std::vector<SnapshotSet>& sets) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("save_snapshots_csv: cannot open " + path);
    if (sets.empty()) return;
    const std::size_t n = sets.front().x.empty() ? 0 : sets.front().x.front().size();
    const std::size_t m = sets.front().input.size();
    out << "# snapshot-csv-v1\n";
    for (std::size_t i = 0; i < n; ++i) out << "x" << i + 1 << ",";
    for (std::size_t i = 0; i < m; ++i) out << "u" << i + 1 << ",";
    for (std::size_t i = 0; i < n; ++i) out << "xp" << i + 1 << ",";
    out << "dt\n";
    char buf[32];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << sep;
    };
    for (const auto& set : sets) {
        for (std::size_t j = 0; j < set.count(); ++j) {
            for (double v : set.x[j]) put(v, ',');
            for (double v : set.input) put(v, ',');
            for (double v : set.x_next[j]) put(v, ',');
            put(set.dt, '\n');
        }
    }
}

std::vector<SnapshotSet> load_snapshots_csv(const std::string& path, std::size_t n, std::size_t m) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("load_snapshots_csv: cannot open " + path);
    std::vector<SnapshotSet> sets;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        std::stringstream ss(line);
        std::vector<double> vals;
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 2 * n + m + 1)
            throw InvalidInput("load_snapshots_csv: wrong column count");
        Vector x(vals.begin(), vals.begin() + n);
        Vector u(vals.begin() + n, vals.begin() + n + m);
        Vector xp(vals.begin() + n + m, vals.begin() + 2 * n + m);
        const double dt = vals.back();
        auto it = std::find_if(sets.begin(), sets.end(), [&](const SnapshotSet& s) {
            return inputs_match(s.input, u);
        });
        if (it == sets.end()) {
            SnapshotSet s;
            s.input = u;
            s.dt = dt;
            sets.push_back(std::move(s));
            it = sets.end() - 1;
        } else if (std::abs(it->dt - dt) > 1e-12) {
            throw InvalidInput("load_snapshots_csv: inconsistent dt within one input group");
        }
        it->append(x, xp);
    }
    return sets;
}

}  // namespace sdpc
