// rng.hpp - seeded random sources and counter-style seed derivation
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "cpim/types.hpp"

namespace cpim {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a master seed with any number of counters into an independent stream seed.
/// The result depends only on the values, so work can be scheduled in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = splitmix64(master);
    for (auto c : counters) {
        h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline std::uint64_t seed_from_double(double v) { return std::bit_cast<std::uint64_t>(v); }

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline Complex complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    double re = nd(rng);
    double im = nd(rng);
    return {re, im};
}

inline Bits random_bits(Rng& rng, std::size_t count) {
    Bits b(count);
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& v : b) {
        v = static_cast<std::uint8_t>(coin(rng));
    }
    return b;
}

} // namespace cpim
