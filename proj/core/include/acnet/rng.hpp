#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace acnet {

__extension__ using uint128_t = unsigned __int128;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Stable per-purpose stream identifiers, so stage seeds never collide.
namespace stream {
inline constexpr std::uint64_t kExpansion = fnv1a64("expansion");
inline constexpr std::uint64_t kRandomInfosphere = fnv1a64("random-infosphere");
inline constexpr std::uint64_t kNegatives = fnv1a64("negatives");
inline constexpr std::uint64_t kDropout = fnv1a64("dropout");
inline constexpr std::uint64_t kInit = fnv1a64("init");
inline constexpr std::uint64_t kShuffle = fnv1a64("shuffle");
inline constexpr std::uint64_t kSynth = fnv1a64("synth");
}  // namespace stream

/// Counter-based generator: output i is mix64(key + i * golden), where the key is
/// derived from a global seed and any number of sub-keys (stage, author, path, ...).
/// Streams for distinct keys are independent of evaluation order, which makes
/// per-author work reproducible under any scheduling. All distributions are
/// implemented here so results do not depend on the standard library vendor.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept : key_(mix64(seed)) {
    for (std::uint64_t k : keys) key_ = mix64(key_ ^ mix64(k + 0x632be59bd9b4e019ull));
  }

  std::uint64_t next() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    uint128_t m = static_cast<uint128_t>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128_t>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index drawn proportionally to non-negative weights; returns weights.size() if all are zero.
  std::size_t categorical(std::span<const double> weights) noexcept {
    double total = 0;
    for (double w : weights) total += w;
    if (!(total > 0)) return weights.size();
    const double target = uniform() * total;
    double acc = 0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0) continue;
      acc += weights[i];
      last_positive = i;
      if (target < acc) return i;
    }
    return last_positive;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_{0};
};

}  // namespace acnet
