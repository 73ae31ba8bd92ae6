#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace scenerouter {

// Seeded generator with platform-independent distribution mappings.
// std::mt19937_64 output is fully specified by the standard; the standard
// distributions are not, so the transforms to uniform/normal live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n) without modulo bias. n must be > 0.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Stage-keyed sub-seed: each pipeline stage draws from its own stream so
// that stages stay reproducible independently of one another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace scenerouter
