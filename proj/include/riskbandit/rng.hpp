#pragma once

#include <array>
#include <cstdint>

namespace riskbandit {

// The simulation RNG is pinned to xoshiro256++ so that seeded runs produce
// bit-identical output on every platform and standard library. Standard
// <random> engines are portable but their distributions are not, hence the
// explicit 53-bit uniform construction below.

/// One step of the splitmix64 sequence; also used as the stream-derivation
/// hash for per-replication seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256++ with splitmix64 state expansion from a single 64-bit seed.
class Xoshiro256PlusPlus {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256PlusPlus(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in [0, 1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(operator()() >> 11) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Seed of the independent stream used by one replication:
/// base_seed XOR splitmix64(replication_index).
inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t replication) {
    std::uint64_t sm = replication;
    return base_seed ^ splitmix64_next(sm);
}

} // namespace riskbandit
