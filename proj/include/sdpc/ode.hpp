#pragma once

#include <functional>

#include "sdpc/matrix.hpp"

namespace sdpc {

using VectorField = std::function<Vector(double, const Vector&)>;

/// Classical 4th-order Runge-Kutta update over one step of size h.
/// Throws IntegrationBlowup (carrying t) if a stage evaluates non-finite.
Vector rk4_step(const VectorField& field, double t, const Vector& x, double h);

}  // namespace sdpc
