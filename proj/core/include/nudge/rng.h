#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nudge {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a 64-bit. Stable across platforms and releases, unlike std::hash.
std::uint64_t stable_hash(std::string_view text);

// Seeded random source with platform-independent variate generation.
//
// std::mt19937_64 itself is fully specified by the standard, but the
// std::*_distribution adaptors are not, so every conversion from raw
// 64-bit words to variates is implemented here. Identical seeds give
// identical streams on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be > 0. Rejection sampling, no bias.
  std::uint64_t index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  double normal();
  double lognormal(double mu, double sigma);
  double gamma(double shape);
  double beta(double a, double b);

  // Exact Poisson variate (multiplication method in chunks of mean <= 16).
  std::uint64_t poisson(double mean);

  // Sum of n Bernoulli(p) draws; intended for small n.
  std::uint64_t binomial(std::uint64_t n, double p);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nudge
