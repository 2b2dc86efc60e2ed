#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace malmas {

/// SplitMix64. Chosen over std::mt19937 + std::uniform_int_distribution
/// because the distribution algorithms of the standard library differ between
/// implementations, and fold/split assignment must be reproducible anywhere
/// (the external evaluator re-derives folds from the same seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  /// Fisher-Yates, iterating from the back: for i = n-1..1 swap(i, below(i+1)).
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derived stream seed: base ^ mix(fnv1a(label)). Used for the per-round and
/// per-agent seeds so scheduling order never changes which numbers a worker sees.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  Rng mixer(fnv1a(label));
  return base ^ mixer.next();
}

}  // namespace malmas
