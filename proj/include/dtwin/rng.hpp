#pragma once
// Counter-based randomness. Every draw is a pure function of a seed and a
// handful of integer keys, so the same (seed, keys) always yields the same
// value no matter which thread asks first or in what order work is scheduled.
#include <cmath>
#include <cstdint>
#include <vector>

namespace dtwin::rng {

// SplitMix64 finalizer: full-avalanche 64-bit mix.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a) { return mix(seed ^ mix(a)); }
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix(key(seed, a) ^ mix(b));
}
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(key(seed, a, b) ^ mix(c));
}
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                         std::uint64_t d) {
  return mix(key(seed, a, b, c) ^ mix(d));
}

// Uniform double in (0, 1]; never returns 0 so log() is always safe.
inline double uniform(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller from two decorrelated counters.
inline double gaussian(std::uint64_t h) {
  const double u1 = uniform(mix(h ^ 0x6a09e667f3bcc908ULL));
  const double u2 = uniform(mix(h ^ 0xbb67ae8584caa73bULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Small sequential stream for shuffles and subset draws inside one owner.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased-enough bounded draw (Lemire reduction); deterministic.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double uniform01() { return rng::uniform(next_u64()); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Purpose tags keep independent substreams from colliding on the same seed.
inline constexpr std::uint64_t kNoise = 0x4e4f495345ULL;    // dataset measurement noise
inline constexpr std::uint64_t kSplit = 0x53504c4954ULL;    // train/test row selection
inline constexpr std::uint64_t kGreedy = 0x4752454459ULL;   // randomized greedy restarts
inline constexpr std::uint64_t kVisit = 0x5649534954ULL;    // local-search node order
inline constexpr std::uint64_t kMission = 0x4d4953534eULL;  // in-flight sensor noise
inline constexpr std::uint64_t kInstance = 0x494e5354ULL;   // synthetic test instances
inline constexpr std::uint64_t kChain = 0x434841494eULL;    // sweep warm-start continuations
inline constexpr std::uint64_t kEmbed = 0x454d424544ULL;    // cross-layout warm starts

}  // namespace dtwin::rng
