#pragma once

#include <cstdint>
#include <vector>

namespace pansharp {

/// xorshift64* generator. Seeding runs the seed through one splitmix64 step
/// so every seed (including 0) yields a non-zero state.
///
///   seed:  z = seed + 0x9E3779B97F4A7C15
///          z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///          z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///          state = z ^ (z >> 31)   (0 is replaced by 0x9E3779B97F4A7C15)
///   next:  x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0,1): top 53 bits of next() times 2^-53.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// next() % bound.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via Box-Muller (uses two uniforms per call).
    double normal();

    /// Fisher-Yates: for i = n-1 down to 1, swap(i, below(i+1)).
    template <class Item>
    void shuffle(std::vector<Item>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace pansharp
