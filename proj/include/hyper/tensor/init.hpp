#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hyper/tensor/tensor.hpp"

namespace hyper::tensor {

using Rng = std::mt19937_64;

/// Uniform in [lo, hi) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Weight matrix [fan_in x fan_out], uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<T> values(fan_in * fan_out);
  for (auto& v : values) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  return Tensor<T>::parameter({fan_in, fan_out}, std::move(values));
}

template <typename T>
Tensor<T> constant_parameter(Shape shape, T value) {
  return Tensor<T>::parameter(shape, std::vector<T>(shape_size(shape), value));
}

}  // namespace hyper::tensor
