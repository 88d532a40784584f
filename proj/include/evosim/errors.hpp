#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace evosim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct InadmissibleMaterialError : Error {
    using Error::Error;
};

/// Thrown when an iterative solve fails to reach its tolerance; carries the
/// residual history so callers can report where convergence stalled.
struct SolverError : Error {
    std::vector<double> residual_history;

    SolverError(const std::string &msg, std::vector<double> history)
        : Error(msg), residual_history(std::move(history)) {}
};

struct ConfigError : Error {
    using Error::Error;
};

struct UsageError : Error {
    using Error::Error;
};

} // namespace evosim
