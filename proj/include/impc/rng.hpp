#pragma once

#include <cstdint>
#include <random>

namespace impc {

// Deterministic uniform source. The raw engine is seeded directly and doubles
// are derived from the top 53 bits, so streams are reproducible across
// platforms and standard-library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace impc
