#pragma once

#include <stdexcept>
#include <string>

namespace uavrisk {

// Bad arguments to a pure operation (length mismatch, level out of range, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// File content that cannot be turned into a valid domain object.
struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent configuration detected before any computation starts.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlanningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace uavrisk
