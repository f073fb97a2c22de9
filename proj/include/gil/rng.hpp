#pragma once

#include <cstdint>
#include <random>

namespace gil {

/// splitmix64 step; used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random stream. Every stochastic component owns one; sub-streams
/// are forked from the original seed so draw order elsewhere cannot change
/// them.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }

    /// Inclusive range.
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }

    uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return eng_; }

    Rng fork(uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

private:
    uint64_t seed_;
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace gil
