#pragma once

#include <stdexcept>
#include <string>

namespace rlnn {

/// Raised when a computation produces a non-finite or otherwise unusable
/// result (NaN loss, failed root bracket, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed experiment configuration (unknown keys, bad types,
/// out-of-range values).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace detail
}  // namespace rlnn
