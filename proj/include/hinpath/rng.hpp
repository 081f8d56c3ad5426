#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace hinpath {

enum class RngPurpose : std::uint64_t { kInit = 1, kSample = 2, kDropout = 3, kSynth = 4 };

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Counter-based random stream. A draw is a pure function of
/// (seed, purpose, substream keys, counter), so any position can be replayed
/// without consuming the draws before it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, RngPurpose purpose, std::uint64_t counter = 0)
      : key_(detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(purpose)))),
        counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() { return detail::splitmix64(key_ ^ detail::splitmix64(counter_++)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; always consumes two draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unbiased integer in [0, n), n >= 1.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = max() - (max() % n + 1) % n;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return x % n;
  }

  /// Independent stream keyed by `key`, starting at counter 0.
  RngStream substream(std::uint64_t key) const { return RngStream(detail::splitmix64(key_ + detail::splitmix64(key)), 0, Raw{}); }
  RngStream substream(std::string_view key) const { return substream(detail::fnv1a(key)); }

  std::uint64_t counter() const { return counter_; }

 private:
  struct Raw {};
  RngStream(std::uint64_t key, std::uint64_t counter, Raw) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace hinpath
