#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "patswarm/geometry.hpp"

namespace patswarm {

/// Deterministic random source. All draws are hand-rolled on top of the
/// mt19937_64 bit stream because std::uniform_real_distribution and
/// std::normal_distribution are not bit-reproducible across standard
/// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] by rejection-free modulo of a wide draw.
    /// Bias is below 2^-40 for the small ranges used here.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
        return lo + static_cast<std::int64_t>(gen_() % span);
    }

    /// Box-Muller transform; the spare value is discarded so that each call
    /// consumes exactly two uniforms regardless of history.
    double gaussian(double mean, double sigma) {
        double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 gen_;
};

/// 64-bit FNV-1a, used for config digests in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace patswarm
