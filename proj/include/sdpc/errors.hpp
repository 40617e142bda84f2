#pragma once

#include <stdexcept>
#include <string>

namespace sdpc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

// Raised when a vector field evaluates to a non-finite value during integration.
struct IntegrationBlowup : Error {
    IntegrationBlowup(const std::string& msg, double time) : Error(msg), t(time) {}
    double t;
};

struct DegenerateConstraints : Error {
    using Error::Error;
};

struct Diverged : Error {
    using Error::Error;
};

// An auxiliary error variable reached the boundary of its admissible set.
struct FunnelViolation : Error {
    FunnelViolation(const std::string& msg, double time, double e1, double e2)
        : Error(msg), t(time), e1_norm(e1), e2_norm(e2) {}
    double t;
    double e1_norm;
    double e2_norm;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct InconsistentHistory : Error {
    using Error::Error;
};

struct RankDeficientInputs : Error {
    using Error::Error;
};

struct ConditioningError : Error {
    using Error::Error;
};

struct UnsupportedKernel : Error {
    using Error::Error;
};

struct SurrogateBlowup : Error {
    SurrogateBlowup(const std::string& msg, std::size_t step) : Error(msg), step_index(step) {}
    std::size_t step_index;
};

struct InfeasibleSpline : Error {
    using Error::Error;
};

}  // namespace sdpc
