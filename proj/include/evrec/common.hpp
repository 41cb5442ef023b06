#pragma once

#include <stdexcept>
#include <string>

namespace evrec {

// Bad user input: malformed config/scenario files, invalid parameter ranges.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer dimension mismatches, including checkpoint/scenario mismatches.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered during training; carries the diagnostic dump path.
struct NumericError : std::runtime_error {
    NumericError(const std::string& msg, std::string dump)
        : std::runtime_error(msg), dump_path(std::move(dump)) {}
    std::string dump_path;
};

// Violated internal invariant (cars lost/duplicated, stale caches). Not recoverable.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

inline void internal_check(bool cond, const char* msg) {
    if (!cond) throw InternalError(msg);
}

}  // namespace evrec
