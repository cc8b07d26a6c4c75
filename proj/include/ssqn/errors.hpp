#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssqn {

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a solver iterate blows up (non-finite coordinate or f > 1e12).
struct DivergenceError : std::runtime_error {
    std::uint64_t iteration;
    DivergenceError(const std::string& msg, std::uint64_t k)
        : std::runtime_error(msg), iteration(k) {}
};

}  // namespace ssqn
