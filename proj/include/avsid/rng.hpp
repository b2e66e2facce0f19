#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace avsid {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// Derives an independent, reproducible substream from (seed, stream name,
// index). All randomness in the library flows through this, so a single
// scene seed pins every generated byte.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    std::uint64_t state = seed ^ detail::fnv1a(stream) ^ (index * 0xd1342543de82ef95ULL);
    const std::uint64_t a = detail::splitmix64(state);
    const std::uint64_t b = detail::splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ (index * 0x9e3779b97f4a7c15ULL);
    return detail::splitmix64(state);
}

}  // namespace avsid
