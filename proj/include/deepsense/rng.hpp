#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace deepsense {

/// Engine used for every random stream in the project.
using RngStream = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with a list of counters into an independent sub-seed.
/// The result depends only on the values, never on call order, so work split
/// across threads draws the same numbers as a serial run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

inline RngStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return RngStream(derive_seed(seed, counters));
}

}  // namespace deepsense
