#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sonia {

/// Deterministic random source. All distributions are implemented on top of
/// the raw mt19937_64 output with fixed mappings, so a given seed produces
/// the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double gaussian();

  /// Uniform integer in [0, bound), bound >= 1, rejection sampled.
  std::uint64_t integer(std::uint64_t bound);

  /// k distinct indices from [0, n), ascending (Floyd's algorithm).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sonia
