// Seed derivation helpers. Every stochastic routine takes a std::mt19937_64
// by reference; independent streams (per sample, per trajectory, per trial)
// are derived from a master seed with splitmix64 so results do not depend on
// scheduling or evaluation order.
#pragma once

#include <cstdint>
#include <random>

namespace qcs {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic stream id for trial `index` of the run seeded by `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace qcs
