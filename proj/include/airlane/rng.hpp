#pragma once

#include <cstdint>
#include <random>

namespace airlane {

// Stream tags keep independent draws (init sampling, resampling, log noise)
// decorrelated under a single scenario seed.
enum class RngStream : std::uint32_t {
    kInitUniform = 1,
    kResample = 2,
    kLogNoise = 3,
    kPlanner = 4,
};

/// Deterministic per-purpose generator derived from (seed, stream, salt, index).
inline std::mt19937_64 derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t salt = 0,
                                  std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt),
                      static_cast<std::uint32_t>(salt >> 32), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace airlane
