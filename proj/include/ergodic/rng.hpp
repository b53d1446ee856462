#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace ergodic {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for stream `index` under `seed`. Distinct (seed, index) pairs give
/// unrelated keys.
inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based bit generator: draw k of stream `key` is mix64(key + k * golden).
/// Satisfies UniformRandomBitGenerator, so it plugs into <random> and
/// Boost.Random distributions.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  constexpr CounterStream(std::uint64_t seed, std::uint64_t index) noexcept
      : key_(stream_key(seed, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// FNV-1a, used for ensemble and input fingerprints.
inline constexpr std::uint64_t fnv1a(std::string_view bytes,
                                     std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ergodic
