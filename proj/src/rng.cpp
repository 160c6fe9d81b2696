#include "cabandit/rng.hpp"

#include <cmath>
#include <numbers>

namespace cabandit {

namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t absorb(std::uint64_t h, std::uint64_t word) noexcept {
    return mix(h ^ (word + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace

SplitMix64 substream(const StreamKey& key) noexcept {
    std::uint64_t h = mix(key.root ^ 0x5851f42d4c957f2dULL);
    h = absorb(h, static_cast<std::uint64_t>(key.purpose));
    h = absorb(h, key.trial);
    h = absorb(h, key.step);
    h = absorb(h, key.round);
    return SplitMix64(h);
}

std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = SplitMix64::max() - SplitMix64::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

double standard_normal(SplitMix64& rng) noexcept {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cabandit
