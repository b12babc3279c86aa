#pragma once

// Portable seeded randomness.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard.
// Streams: stream s of seed S is the engine seeded with
//   std::seed_seq{lo32(S), hi32(S), lo32(s), hi32(s)}
// (std::seed_seq's mixing is also standard-specified). Distributions are
// implemented here rather than via <random> distributions, whose algorithms are
// implementation-defined:
//   uniform01 = (u >> 11) * 2^-53                        in [0, 1)
//   normal    = Box-Muller, pairs (r cos t, r sin t) with
//               r = sqrt(-2 ln(1 - u1)), t = 2 pi u2, second value cached.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace qflow {

/// Well-known stream ids, so every matrix gets its own sub-stream.
enum class Stream : std::uint64_t {
    w1 = 0,
    w2 = 1,
    b1 = 2,
    b2 = 3,
    dataset = 16,
    split = 17,
    probe = 18,
};

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }
    Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double t = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(t);
        has_cached_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n). Rejection sampling, so unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t u;
        do u = engine_();
        while (u >= limit);
        return u % n;
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Derives a child seed from a base seed and a tuple of integers (SplitMix64 finalizer chain).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (std::uint64_t p : parts) h = mix(h ^ mix(p));
    return h;
}

} // namespace qflow
