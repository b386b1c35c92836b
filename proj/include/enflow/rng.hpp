#pragma once

#include <cstdint>
#include <random>

#include "enflow/tensor.hpp"

namespace enflow {

// Mixes a stream id into a seed. Chained to derive independent per-epoch,
// per-batch, per-sample generators without sharing state across threads.
std::uint64_t seed_derive(std::uint64_t seed, std::uint64_t stream);

// Deterministic random source. All value derivation is done from raw engine
// output; std::uniform_real_distribution and friends are avoided because
// their algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Integer uniform on [0, n), n > 0. Rejection-sampled, unbiased.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  double rademacher() { return (bits() & 1u) ? 1.0 : -1.0; }

  Tensor normal_tensor(int rows, int cols);
  Tensor rademacher_tensor(int rows, int cols);

  // Fresh generator for an independent stream; does not disturb this one.
  Rng split(std::uint64_t stream) const {
    return Rng(seed_derive(seed_, stream));
  }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 gen_;
};

}  // namespace enflow
