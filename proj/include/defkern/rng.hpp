#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace defkern {

/// splitmix64 step; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child seed from (seed, stream, index). Distinct streams never
/// share state, which keeps training resumable without RNG bookkeeping.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(seed ^ mix64(stream)) ^ index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Uniform double in [0,1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Standard normal variates via Box-Muller. Hand-rolled because the
/// distribution of std::normal_distribution is implementation-defined, and
/// noise realizations must be reproducible across toolchains.
class GaussianSampler {
public:
    explicit GaussianSampler(std::mt19937_64& rng) : rng_(rng) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Offset keeps u1 strictly positive so log(u1) is finite.
        const double u1 = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = uniform_unit(rng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64& rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace defkern
