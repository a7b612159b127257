#pragma once

#include <stdexcept>
#include <string>

namespace ffl {

// y = 0 or omega = 0 where the norm is not smooth.
struct ZeroVectorError : std::domain_error {
    using std::domain_error::domain_error;
};

// Fundamental tensor failed positive definiteness (F3 violation).
struct ConvexityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Legendre Newton iteration did not converge.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double residual)
        : std::runtime_error(msg), last_residual(residual) {}
    double last_residual;
};

// Flag with g_v-dependent edge degenerate against the pole.
struct DegenerateFlagError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// F3 broke down during a flow step.
struct FlowDegenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Heat step lost positivity; caller should reduce dt.
struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ffl
