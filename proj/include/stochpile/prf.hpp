#pragma once

// Counter-based pseudo-randomness. Every random draw in the simulator is a
// pure function of (seed, site, toppling index), so runs are reproducible
// bit-for-bit on any platform and independent of toppling order.

#include <cstdint>

namespace stochpile {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). The constants below are
// frozen; changing them changes every golden value in the test suite.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// One absorption round: fold a word into the running state.
constexpr std::uint64_t prf_absorb(std::uint64_t state, std::uint64_t word) noexcept {
    return mix64(state + kGoldenGamma + word);
}

constexpr std::uint64_t prf_init(std::uint64_t seed) noexcept {
    return mix64(seed + kGoldenGamma);
}

// Uniform 64-bit word for the i-th toppling at lattice site (x, y).
// Callers that fix a site and vary i can cache the first three rounds.
constexpr std::uint64_t indexed_word(std::uint64_t seed, std::int32_t x, std::int32_t y,
                                     std::uint64_t i) noexcept {
    std::uint64_t h = prf_init(seed);
    h = prf_absorb(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(x)));
    h = prf_absorb(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(y)));
    return prf_absorb(h, i);
}

// Derived seed for replicate r of sweep cell c (same chain, two words).
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t cell,
                                    std::uint64_t replicate) noexcept {
    return prf_absorb(prf_absorb(prf_init(base_seed), cell), replicate);
}

}  // namespace stochpile
