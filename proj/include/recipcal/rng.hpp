#pragma once

#include <cstdint>
#include <random>

#include "recipcal/types.hpp"

namespace recipcal {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Tags that select an independent stream inside one trial. Keeping the
/// streams apart means that e.g. changing the noise level leaves the
/// channel and hardware draws untouched.
enum class StreamTag : std::uint64_t {
  kTrial = 0,
  kChannels = 1,
  kProfiles = 2,
  kNoise = 3,
  kPerturbation = 4,
};

/// Seed for (master_seed, trial_index, tag). Each input passes through a
/// splitmix round before mixing so neighbouring indices decorrelate.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial_index,
                                    StreamTag tag) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ splitmix64(trial_index + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(tag) + 0x8CB92BA72F3D8DD7ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t trial_index, StreamTag tag) {
  return Rng{derive_seed(master_seed, trial_index, tag)};
}

/// Stream for one entity (an AP, a user, a channel) inside a tagged stream.
inline Rng make_entity_stream(std::uint64_t master_seed, std::uint64_t trial_index, StreamTag tag,
                              std::uint64_t entity) {
  return Rng{splitmix64(derive_seed(master_seed, trial_index, tag) ^ splitmix64(entity))};
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cd complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace recipcal
