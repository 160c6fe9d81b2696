#pragma once

#include <cstdint>
#include <limits>

namespace cabandit {

// Independent random substreams keyed by (root seed, trial, step, round, purpose).
// A key is hashed into the state of a SplitMix64 generator, so a stream's draws depend
// only on its key and never on how many draws other streams made or in which order
// trials ran.

enum class Purpose : std::uint64_t {
    Context = 1,
    Reward = 2,
    Policy = 3,
    GroundTruth = 4,
    MonteCarlo = 5,
    Support = 6,
};

struct StreamKey {
    std::uint64_t root = 0;
    std::uint64_t trial = 0;
    std::uint64_t step = 0;
    std::uint64_t round = 0;
    Purpose purpose = Purpose::Context;
};

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

SplitMix64 substream(const StreamKey& key) noexcept;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int bernoulli(SplitMix64& rng, double p) noexcept { return uniform01(rng) < p ? 1 : 0; }

/// Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n) noexcept;

/// Standard normal by the Box-Muller transform (consumes two draws).
double standard_normal(SplitMix64& rng) noexcept;

}  // namespace cabandit
