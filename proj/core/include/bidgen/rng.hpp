#pragma once

#include <cstdint>

namespace bidgen {

/// Deterministic PRNG with hand-rolled distributions. The standard library's
/// distribution objects are implementation-defined, so every draw here is
/// derived from the raw 64-bit stream to keep byte-identical replay across
/// compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of entropy.
  double uniform();
  double uniform(double lo, double hi);

  /// Inclusive integer range [lo, hi], unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller. The spare half of each pair is cached,
  /// so draws are part of the stream state.
  double normal();
  double normal(double mean, double stddev);

  /// exp(N(mu, sigma^2)).
  double lognormal(double mu, double sigma);

  /// Independent child stream; stable under reordering of other draws.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Stateless seed derivation used where per-item streams are needed
/// (episodes, batches) without constructing intermediate Rngs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace bidgen
