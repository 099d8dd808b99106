#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fedrelax::detail {

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// Hand-rolled so draws are identical across standard libraries.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; the second variate of the pair is
// discarded to keep draw positions independent of call history.
inline double normal01(std::mt19937_64& g) {
    double u1 = uniform01(g);
    while (u1 == 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Seed scrambler for deriving independent streams from one user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace fedrelax::detail
