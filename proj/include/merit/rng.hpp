#pragma once

// ctr64 v1: SplitMix64 evaluated in counter mode. Draw i of a stream with key
// k is mix64(k + (i + 1) * 0x9E3779B97F4A7C15), so any draw can be computed
// independently and streams split by hashing (seed, stream id) into a key.
// Floating-point derivation (uniform, exponential, normal) is part of the
// versioned contract; benchmark tables depend on it.

#include <cstddef>
#include <cstdint>

namespace merit {

inline constexpr int kRngVersion = 1;

std::uint64_t mix64(std::uint64_t z);

/// Seed of sub-stream `index` under `seed` (trials, matrix blocks).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Rational approximation of the standard normal quantile (Acklam's
/// coefficients, relative error below 1.2e-9 on (0, 1)).
double inverse_normal_cdf(double p);

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  static CounterRng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return CounterRng(derive_seed(seed, stream_id));
  }

  std::uint64_t next_u64();
  /// ((u >> 11) + 0.5) * 2^-53: strictly inside (0, 1).
  double uniform();
  double exponential();
  double normal();
  /// floor(uniform() * bound), bound >= 1.
  std::size_t below(std::size_t bound);

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace merit
