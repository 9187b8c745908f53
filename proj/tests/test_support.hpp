#pragma once

#include <random>
#include <vector>

#include "foaa/tensor.hpp"

namespace foaa::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

// Triple loop, no blocking, no transposes.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  return c;
}

}  // namespace foaa::test
