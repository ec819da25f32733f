#pragma once

#include <cstdint>
#include <string_view>

namespace hsi {

// Counter-based random source. A StreamKey names an independent stream by a
// hierarchy of 64-bit words (seed, scenario, node, attempt, ...); draw i of a
// stream is a pure function of (key, i), so no draw depends on how many draws
// came before it. The mixing function is the SplitMix64 finalizer, which is
// fully specified by integer arithmetic and therefore identical on every
// platform. See docs/rng.md.
class StreamKey {
 public:
  constexpr explicit StreamKey(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  constexpr StreamKey child(std::uint64_t word) const {
    StreamKey k(*this);
    k.key_ = mix(key_ ^ mix(word + 0x9e3779b97f4a7c15ULL));
    return k;
  }
  StreamKey child(std::string_view label) const { return child(fnv1a(label)); }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on draws 2c and 2c+1.
  double normal(std::uint64_t counter) const;

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const;

  constexpr std::uint64_t value() const { return key_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t key_;
};

}  // namespace hsi
