#include "hyper/tensor/adamw.hpp"

#include <cmath>

namespace hyper::tensor {

template <typename T>
void adamw_step(std::span<Tensor<T>> params, AdamWState<T>& state) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), T(0));
      state.second_moment.emplace_back(p.size(), T(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeMismatch("adamw_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size()) {
      throw ShapeMismatch("adamw_step: moment shape mismatch for parameter " + std::to_string(i));
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T lr = static_cast<T>(c.lr);
  const T decay = static_cast<T>(1.0 - c.lr * c.weight_decay);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T eps = static_cast<T>(c.eps);
  const T inv_bc1 = static_cast<T>(1.0 / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    T* w = p.data();
    const T* g = p.has_grad() ? p.grad().data() : nullptr;
    T* m = state.first_moment[i].data();
    T* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const T gj = g ? g[j] : T(0);
      w[j] *= decay;
      m[j] = b1 * m[j] + (T(1) - b1) * gj;
      v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
      const T mhat = m[j] * inv_bc1;
      const T vhat = v[j] * inv_bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template void adamw_step<float>(std::span<Tensor<float>>, AdamWState<float>&);
template void adamw_step<double>(std::span<Tensor<double>>, AdamWState<double>&);

}  // namespace hyper::tensor
