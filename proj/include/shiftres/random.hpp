#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace shiftres {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds from a parent.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for a named stream of `parent`. Distinct tags give unrelated streams.
constexpr Seed derive_seed(Seed parent, std::uint64_t tag) noexcept {
    return mix_seed(mix_seed(parent) ^ mix_seed(tag + 0x5851f42d4c957f2dULL));
}

inline Engine make_engine(Seed seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

// Stream tags used across the library. Keeping them in one place stops two
// modules from drawing the same numbers by accident.
namespace stream {
inline constexpr std::uint64_t adjacency = 1;
inline constexpr std::uint64_t mask = 2;
inline constexpr std::uint64_t params = 3;
inline constexpr std::uint64_t drive_train = 4;
inline constexpr std::uint64_t drive_test = 5;
inline constexpr std::uint64_t memory_noise = 6;
inline constexpr std::uint64_t initial_state = 7;
inline constexpr std::uint64_t realization = 8;
} // namespace stream

} // namespace shiftres
