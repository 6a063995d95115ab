#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyper/tensor/tensor.hpp"

namespace hyper::tensor {

struct AdamWConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
struct AdamWState {
  AdamWConfig config;
  std::size_t step = 0;
  std::vector<Buffer<T>> first_moment;
  std::vector<Buffer<T>> second_moment;
};

/// One AdamW update using each parameter's accumulated gradient (a missing
/// gradient counts as zero). Weight decay is decoupled and applied before the
/// adaptive step: p <- p - lr*wd*p, then p <- p - lr * m_hat / (sqrt(v_hat) + eps).
/// Moment buffers are created on the first call; later calls throw
/// ShapeMismatch if the parameter list changes shape.
template <typename T>
void adamw_step(std::span<Tensor<T>> params, AdamWState<T>& state);

}  // namespace hyper::tensor
