#pragma once

#include <cstdint>
#include <random>

#include "minet/random.hpp"
#include "minet/tensor.hpp"

namespace minet::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(splitmix64(seed));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

}  // namespace minet::test
