#pragma once

#include <cstdint>
#include <random>

namespace noma_fusion {

using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream identified by (theta index, trial index) under a
/// master seed. Streams depend only on their coordinates, never on the order
/// in which they are consumed.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t theta_index,
                                    std::uint64_t trial_index) {
  return mix64(mix64(mix64(master) ^ theta_index) ^ (trial_index * 0xd1b54a32d192ed03ULL));
}

inline RandomEngine make_stream(std::uint64_t master, std::uint64_t theta_index, std::uint64_t trial_index) {
  return RandomEngine(stream_seed(master, theta_index, trial_index));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
template <typename Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace noma_fusion
