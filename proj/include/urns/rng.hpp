#pragma once

// Reproducible random sources.  Every replication owns its own engine,
// derived from (master_seed, stream, index) by a SplitMix64 chain, so
// results do not depend on thread scheduling or worker count.  Uniform
// and exponential variates are generated from raw 64-bit draws rather
// than std::*_distribution, which keeps output identical across
// standard-library implementations.

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace urns {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

/// Engine for replication `index` of stream `stream` under a master seed.
inline Engine make_engine(std::uint64_t master_seed, std::uint64_t stream = 0,
                          std::uint64_t index = 0) {
    std::uint64_t s = master_seed;
    (void)splitmix64(s);
    s ^= 0xA5A5A5A55A5A5A5AULL * (stream + 1);
    (void)splitmix64(s);
    s ^= 0xD6E8FEB86659FD93ULL * (index + 1);
    return Engine(splitmix64(s));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard exponential variate.
inline double exponential1(Engine& eng) {
    return -std::log1p(-uniform01(eng));
}

/// Uniform integer in [0, n), n >= 1 (rejection, unbiased).
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        std::uint64_t r = eng();
        if (r >= threshold) return r % n;
    }
}

/// In-place Fisher-Yates shuffle (engine-stable across platforms).
template <class T>
void shuffle_vector(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace urns
