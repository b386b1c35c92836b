#include "enflow/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace enflow {

std::uint64_t seed_derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(bits() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = bits();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  // u1 in (0, 1] so the log is finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Tensor Rng::normal_tensor(int rows, int cols) {
  Tensor t(rows, cols);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = normal();
  return t;
}

Tensor Rng::rademacher_tensor(int rows, int cols) {
  Tensor t(rows, cols);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rademacher();
  return t;
}

}  // namespace enflow
