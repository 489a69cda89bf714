#pragma once

#include <cmath>
#include <cstdint>

namespace bellmanlab {

// splitmix64 finalizer; used as the mixing core of the counter RNG below.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Stateless counter-based generator. Every draw is a pure function of
/// (seed, stream_a, stream_b, index), so results are independent of call
/// order and of how work is scheduled across threads. Monte-Carlo code keys
/// streams by (sample id, substep); probing code keys by point index.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t bits(std::uint64_t a, std::uint64_t b, std::uint64_t idx) const {
        return mix64(mix64(mix64(seed_ ^ mix64(a)) ^ b) ^ idx);
    }

    /// Uniform in the open interval (0, 1).
    double uniform(std::uint64_t a, std::uint64_t b, std::uint64_t idx) const {
        return (static_cast<double>(bits(a, b, idx) >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform_in(double lo, double hi,
                      std::uint64_t a, std::uint64_t b, std::uint64_t idx) const {
        return lo + (hi - lo) * uniform(a, b, idx);
    }

    /// Standard normal via Box-Muller; consumes indices 2*idx and 2*idx+1.
    double normal(std::uint64_t a, std::uint64_t b, std::uint64_t idx) const {
        const double u1 = uniform(a, b, 2 * idx);
        const double u2 = uniform(a, b, 2 * idx + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t index_below(std::uint64_t n,
                              std::uint64_t a, std::uint64_t b, std::uint64_t idx) const {
        return bits(a, b, idx) % n;
    }

    /// Derives a child seed; used to hand independent streams to sub-tasks.
    std::uint64_t derive(std::uint64_t tag) const { return mix64(seed_ ^ mix64(tag)); }

private:
    std::uint64_t seed_;
};

} // namespace bellmanlab
