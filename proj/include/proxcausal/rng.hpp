#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, counter), so streams can be split without shared state and
// the sequence is identical on every platform with IEEE doubles.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace proxcausal {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(hash_combine(splitmix64(seed), stream)) {}

  /// Independent child stream; children of distinct ids never overlap.
  constexpr CounterRng split(std::uint64_t id) const { return CounterRng(key_, id, Raw{}); }

  constexpr std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Box-Muller; uses two uniforms per normal so the stream position is
  /// independent of how many normals were requested before.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(uniform()); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Lemire's multiply-shift; bias is < 2^-64 * bound, irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t position() const { return counter_; }

 private:
  struct Raw {};
  constexpr CounterRng(std::uint64_t parent_key, std::uint64_t id, Raw)
      : key_(hash_combine(parent_key, id)) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace proxcausal
