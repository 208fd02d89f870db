#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dmcc {

using Rng = std::mt19937_64;

// Tags that separate the independent random streams of an experiment.
enum class StreamTag : std::uint64_t {
  topology = 0x746f706f,
  true_weights = 0x77656967,
  run = 0x72756e73,
  regressor = 0x72656772,
  noise = 0x6e6f6973,
  pilot = 0x70696c6f,
  kernel = 0x6b65726e,
};

/// splitmix64 finalizer applied to `seed ^ tag`; distinct tags give
/// statistically unrelated child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

/// Folds a sequence of tags into a child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag) {
  return mix_seed(seed, static_cast<std::uint64_t>(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  return derive_seed(seed, {static_cast<std::uint64_t>(tag), index});
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace dmcc
