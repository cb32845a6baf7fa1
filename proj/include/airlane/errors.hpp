#pragma once

#include <stdexcept>
#include <string>

namespace airlane {

/// Invalid configuration or precondition violation supplied by the caller.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input outside the valid spatial or temporal range of an operation.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Resampling could not produce a feasible state after repeated rejection.
struct InfeasibleResample : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Not enough data to fit a model (e.g. too few training trajectories).
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace airlane
