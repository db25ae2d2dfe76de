#pragma once

#include <cstdint>
#include <random>

namespace ucrbm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate (seed, index) pairs.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for sub-stream `index` of `master_seed`.
///
/// Every sampled quantity in the library draws from streams obtained here
/// with a fixed index assignment, so results do not depend on how work is
/// split across threads.
inline Rng stream_rng(std::uint64_t master_seed, std::uint64_t index) {
    return Rng(mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace ucrbm
