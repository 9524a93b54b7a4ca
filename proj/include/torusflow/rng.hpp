#pragma once

#include <cstdint>

namespace torusflow {

/// Counter-based deterministic random stream.
///
/// draw(seed, counter) is a pure function of its arguments, so any consumer
/// can reproduce a stream without sharing generator state.  The mixing
/// function is splitmix64 applied to seed and counter; doubles are formed
/// from the top 53 bits.  Documented in the README so alternate
/// implementations can match streams bitwise.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t draw_u64(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(splitmix64(seed) ^ splitmix64(counter * 0xD1B54A32D192ED03ULL + 1));
}

/// Uniform in [0, 1).
inline double draw_unit(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(draw_u64(seed, counter) >> 11) * 0x1.0p-53;
}

/// Uniform in [-1, 1).
inline double draw_symmetric(std::uint64_t seed, std::uint64_t counter) {
    return 2.0 * draw_unit(seed, counter) - 1.0;
}

} // namespace rng
} // namespace torusflow
