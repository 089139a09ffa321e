#pragma once

// Seeded randomness with a fixed, platform-independent output sequence.
// std::mt19937_64 is fully specified by the standard; the distributions
// and std::shuffle are not, so bounded draws and shuffles live here.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace som {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent per-item seeds from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return mix_seed(seed ^ mix_seed(salt));
}

/// Unbiased draw from [0, n) by rejection. n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    // [threshold, 2^64) holds a multiple of n values.
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x < threshold);
    return x % n;
}

/// Fisher-Yates.
template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace som
