#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace mfad {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for repeated trial t of a run seeded with base_seed.
constexpr std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t t) noexcept {
    return base_seed ^ splitmix64(t);
}

using Rng = std::mt19937_64;

// Unbiased integer in [0, bound). Lemire-free rejection form so results do
// not depend on the standard library's distribution implementation.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = Rng::max() - (Rng::max() - bound + 1) % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v > limit);
    return v % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; deterministic across standard libraries.
inline double standard_normal(Rng& rng) {
    double u1;
    do {
        u1 = uniform_unit(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

// First `count` entries of a seeded Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count && i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count < n ? count : n);
    return pool;
}

// FNV-1a, used for content hashes in reports.
class Fnv1a {
public:
    void update(const void* data, std::size_t len) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ULL;
        }
    }
    template <typename T>
    void update_value(const T& v) noexcept { update(&v, sizeof(T)); }
    std::uint64_t digest() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace mfad
