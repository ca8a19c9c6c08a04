#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace loom {

/// SplitMix64 finalizer. Used to derive independent stream seeds from the
/// single user-supplied 64-bit seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Folds a root seed and a list of stream tags into one seed.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) noexcept;

/// All randomness in the library flows through this generator:
/// std::mt19937_64 (a fully specified algorithm) for raw bits, uniform doubles
/// from the top 53 bits, Gaussians by the Box-Muller transform. The standard
/// <random> distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace loom
