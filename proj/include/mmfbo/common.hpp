#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mmfbo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Length / shape mismatch between curves, grids or matrices.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside its mathematical domain (negative scale, point off-grid, ...).
struct DomainError : Error {
    using Error::Error;
};

struct InsufficientDataError : Error {
    using Error::Error;
};

// Linear system not positive definite even after jitter escalation.
struct ConditioningError : Error {
    using Error::Error;
};

// Candidate pool empty after the exclusion filter.
struct PoolExhaustedError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct OracleError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

inline bool is_finite(double x) { return std::isfinite(x); }

template <typename Seq>
bool all_finite(const Seq& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

// Shortest decimal representation that round-trips, so persisted numbers are
// byte-stable across reruns.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace mmfbo
