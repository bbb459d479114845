#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace codetopics {

// Seeded generator whose output sequence is identical on every platform.
// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so the mappings below are written out by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::size_t below(std::size_t n);

    // Standard normal via Box-Muller (one value per call; the pair is discarded).
    double normal();

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace codetopics
