#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace ktube {

/// SplitMix64: a 64-bit counter-based generator (state advances by a fixed
/// odd increment, output is a bijective mix of the state). Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

/// Independent random streams. The tag is folded into every derived state,
/// so two purposes sharing a seed still draw disjoint sequences.
enum class Stream : std::uint64_t {
  Candidates = 1,
  Training = 2,
  Validation = 3,
  Planning = 4,
  Rollout = 5,
  Synthetic = 6,
};

inline std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Candidates: return "candidates";
    case Stream::Training: return "training";
    case Stream::Validation: return "validation";
    case Stream::Planning: return "planning";
    case Stream::Rollout: return "rollout";
    case Stream::Synthetic: return "synthetic";
  }
  return "unknown";
}

/// Generator for item `index` of stream (seed, tag). Used per row / per
/// candidate so that sharded generation equals sequential generation.
inline SplitMix64 make_stream(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
  std::uint64_t h = SplitMix64::mix(seed ^ 0x6A09E667F3BCC909ULL);
  h = SplitMix64::mix(h ^ (static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL));
  h = SplitMix64::mix(h + index * 0x9E3779B97F4A7C15ULL);
  return SplitMix64(h);
}

inline double uniform(SplitMix64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace ktube
