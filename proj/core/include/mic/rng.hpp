#pragma once

#include <cstdint>
#include <random>

namespace mic {

/// Deterministic random source. Wraps std::mt19937_64 but draws variates
/// through fixed inversion formulas, so the same seed yields the same stream
/// on every platform and standard-library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent child stream; used to decorrelate replications and the
  /// stages of scenario generation without consuming draws from the parent.
  [[nodiscard]] static Rng split(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on {0, ..., n - 1} by rejection (unbiased).
  int uniform_int(int n);

  /// Exponential with the given rate, by inversion.
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mic
