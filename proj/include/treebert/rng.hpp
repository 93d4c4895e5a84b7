#pragma once

#include <cstdint>
#include <random>

namespace treebert {

/// Seeded random source with platform-independent derived distributions.
///
/// Only the raw 64-bit engine output is taken from the standard library; the
/// uniform, integer and Gumbel draws are computed here so that a seed yields
/// the same stream with any standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform in (0, 1); never returns exactly zero.
  double uniform_open();

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard Gumbel(0, 1) draw.
  double gumbel();

  bool bernoulli(double p) { return uniform() < p; }

  /// Seed for an independent stream: corpus seed combined with an index.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

}  // namespace treebert
