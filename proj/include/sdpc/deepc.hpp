#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "sdpc/matrix.hpp"
#include "sdpc/optim.hpp"

namespace sdpc {

/// Block Hankel matrix of depth L: column j is the stacked window
/// signal[j..j+L-1].
Matrix build_hankel(const std::vector<Vector>& signal, std::size_t depth);

/// True iff the depth-`order` Hankel matrix of u has full row rank.
bool is_persistently_exciting(const std::vector<Vector>& u, std::size_t order);

/// Input/output data with its depth-L Hankel matrices. Construction verifies
/// that the input is persistently exciting of order L + 2m, the hypothesis
/// needed for span arguments at depth L.
struct HankelStack {
    std::vector<Vector> u_data;
    std::vector<Vector> y_data;
    std::size_t depth = 0;
    Matrix hu;
    Matrix hy;

    static HankelStack make(std::vector<Vector> u, std::vector<Vector> y, std::size_t depth);

    std::size_t input_dim() const { return u_data.front().size(); }
    std::size_t output_dim() const { return y_data.front().size(); }
    std::size_t sample_count() const { return u_data.size(); }
    std::size_t coefficient_dim() const { return hu.cols(); }
};

/// Finds coefficients nu with [Hu; Hy] nu = [u_test; y_test] (least squares).
/// Returns nullopt when the residual exceeds 1e-8 * (1 + |rhs|), i.e. when the
/// window is not explainable by the recorded data.
std::optional<Vector> fl_explain(const HankelStack& stack, const std::vector<Vector>& u_test,
                                 const std::vector<Vector>& y_test);

/// Evaluates the Hankel span at nu: the synthesized length-L window.
std::pair<std::vector<Vector>, std::vector<Vector>> fl_generate(const HankelStack& stack,
                                                                const Vector& nu);

struct DeepcConfig {
    std::size_t horizon = 0;  // N
    Matrix q;                 // output weight, SPD m x m
    Matrix r;                 // input weight, SPD m x m
    double u_max = 0.0;       // bound on |u(i)| per predicted step; +inf disables it

    std::size_t past_window(std::size_t m) const { return 2 * m; }
    std::size_t pe_order(std::size_t m) const { return horizon + 4 * m; }
    void validate(std::size_t m) const;
};

struct DeepcSolution {
    Vector nu;
    std::vector<Vector> u_pred;  // u(k+1 .. k+N)
    std::vector<Vector> y_pred;  // y(k+1 .. k+N)
    double objective = 0.0;
};

/// One receding-horizon step: minimizes the quadratic tracking cost over the
/// Hankel span subject to the pinned 2m-sample history and the per-step input
/// bound. The stack must have depth N + 2m.
DeepcSolution deepc_step(const HankelStack& stack, const std::vector<Vector>& u_past,
                         const std::vector<Vector>& y_past,
                         const std::vector<Vector>& y_ref_window, const DeepcConfig& cfg);

/// Stateful controller wrapping deepc_step with a rolling history. step()
/// records the pair (input applied now, current measurement) and returns the
/// input for the next sampling instant; until 2m samples exist it returns 0.
class DeepcController {
public:
    using ReferenceFn = std::function<Vector(long)>;

    DeepcController(HankelStack stack, DeepcConfig cfg, ReferenceFn y_ref);

    Vector step(const Vector& y_now);

    const std::optional<DeepcSolution>& last_solution() const { return last_; }
    long time_index() const { return k_; }

private:
    HankelStack stack_;
    DeepcConfig cfg_;
    ReferenceFn y_ref_;
    std::deque<std::pair<Vector, Vector>> history_;  // (u, y)
    Vector u_now_;
    long k_ = 0;
    std::optional<DeepcSolution> last_;
};

}  // namespace sdpc
