#pragma once

#include <cmath>
#include <string>

#include "foaa/tape.hpp"

namespace foaa {

// Entries drawn uniformly from [-bound, bound].
inline Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

inline Parameter uniform_parameter(std::string name, Shape shape, std::size_t fan_in, Rng& rng) {
  return Parameter(std::move(name), uniform_tensor(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
}

inline Parameter zero_parameter(std::string name, Shape shape) {
  return Parameter(std::move(name), Tensor(std::move(shape)));
}

}  // namespace foaa
