#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace crew {

// splitmix64 finalizer; used to derive independent seeds from (seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0);

// Seeded generator. Distributions are implemented here rather than taken from
// <random> because the standard ones are implementation-defined, and replays
// must be bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Standard normal via Box-Muller, caching the spare variate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string serialize() const;
  void deserialize(const std::string& text);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crew
