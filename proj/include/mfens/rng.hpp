#ifndef MFENS_RNG_HPP
#define MFENS_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace mfens {

// splitmix64 finalizer, used to mix (seed, stream, index) tuples into
// well-separated generator seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ b);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b) ^ c);
}

// mt19937_64 raw output is pinned by the standard, so everything below is
// bit-reproducible across platforms.  std::uniform_* distributions are not,
// which is why the mappings are done by hand.
inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Uniform double in [0, 1) with 53 random bits.
inline double next_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform double in [-half_width, +half_width).
inline double next_symmetric(std::mt19937_64& g, double half_width) {
    return half_width * (2.0 * next_unit(g) - 1.0);
}

// Unbiased integer in [0, bound) via Lemire's multiply-shift with rejection.
inline std::uint64_t next_below(std::mt19937_64& g, std::uint64_t bound) {
    if (bound <= 1) return 0;
    while (true) {
        std::uint64_t x = g();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo >= bound || lo >= static_cast<std::uint64_t>(-bound) % bound)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(next_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace mfens

#endif
