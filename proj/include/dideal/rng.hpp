#pragma once

/**
 * @file rng.hpp
 * @brief SplitMix64 generator with per-index stream splitting.
 *
 * Reference algorithm: Steele, Lea, Flood, "Fast splittable pseudorandom number generators" (2014).
 * Doubles are (next() >> 11) * 2^-53; normals use the cosine branch of Box-Muller, so the
 * stream is reproducible across languages and standard libraries.
 */

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dideal {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        return mix(z);
    }

    /// Independent stream for item `index`, leaving this generator untouched.
    SplitMix64 split(std::uint64_t index) const { return SplitMix64(mix(state_ ^ mix(index + 0x632BE59BD9B4E019ULL))); }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    static std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace dideal
