#include "sdpc/ode.hpp"

namespace sdpc {

Vector rk4_step(const VectorField& field, double t, const Vector& x, double h) {
    if (h <= 0.0) throw InvalidInput("rk4_step: step size must be positive");

    auto eval = [&](double ts, const Vector& xs) {
        Vector k = field(ts, xs);
        if (k.size() != x.size()) throw InvalidInput("rk4_step: field dimension mismatch");
        if (!all_finite(k)) throw IntegrationBlowup("rk4_step: non-finite field value", ts);
        return k;
    };

    const Vector k1 = eval(t, x);
    Vector x2 = x;
    vaxpy(0.5 * h, k1, x2);
    const Vector k2 = eval(t + 0.5 * h, x2);
    Vector x3 = x;
    vaxpy(0.5 * h, k2, x3);
    const Vector k3 = eval(t + 0.5 * h, x3);
    Vector x4 = x;
    vaxpy(h, k3, x4);
    const Vector k4 = eval(t + h, x4);

    Vector out = x;
    const double w = h / 6.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

}  // namespace sdpc
