#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace uavfl {

/// Child seed from a parent seed, a component name and up to two integer keys.
/// Stable across platforms (FNV-1a over the name, splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view component, std::uint64_t a = 0,
                          std::uint64_t b = 0);

/// Portable random stream. Only the raw mt19937_64 output is used; every
/// distribution is computed here so results do not depend on the standard
/// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uavfl
