#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace grn {

#ifndef GRN_SCALAR
using real = double;
#else
using real = GRN_SCALAR;
#endif

// Deterministic PRNG handle. Every stochastic op in the library takes one of
// these explicitly; identical seeds give identical single-threaded runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  real uniform(real lo = 0.0, real hi = 1.0) {
    return std::uniform_real_distribution<real>(lo, hi)(gen_);
  }

  real normal(real mean = 0.0, real stddev = 1.0) {
    return std::normal_distribution<real>(mean, stddev)(gen_);
  }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }

  // Categorical draw from unnormalized non-negative weights.
  std::size_t categorical(const std::vector<real>& weights) {
    real total = 0;
    for (real w : weights) total += w;
    if (total <= 0) throw std::invalid_argument("Rng::categorical: non-positive total mass");
    real u = uniform(0.0, total);
    real acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  std::uint64_t raw() { return gen_(); }

  // Independent child stream, e.g. one per environment instance.
  Rng split() { return Rng(gen_()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace grn
