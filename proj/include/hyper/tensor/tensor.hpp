#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hyper/core/errors.hpp"
#include "hyper/tensor/memory.hpp"

namespace hyper::tensor {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;  ///< empty until a gradient flows in
  bool requires_grad = false;
  bool recorded = false;  ///< produced by a tape entry (not a leaf)

  T* grad_data() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

/// Dense row-major tensor with shared ownership of its storage. Copies alias
/// the same node; use `clone()` for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> values);
  static Tensor scalar(T value) { return from({1}, {value}); }
  /// Leaf tensor that collects gradients.
  static Tensor parameter(Shape shape, std::vector<T> values);

  explicit operator bool() const { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  /// Last-axis width; rows() * cols() == size().
  std::size_t cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  std::span<T> values() { return {node_->value.data(), node_->value.size()}; }
  std::span<const T> values() const { return {node_->value.data(), node_->value.size()}; }
  T* data() { return node_->value.data(); }
  const T* data() const { return node_->value.data(); }
  T item() const;
  T at(std::size_t i) const { return node_->value.at(i); }
  T at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    return *this;
  }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient values; an all-zero span-sized view is never fabricated, so
  /// callers must check `has_grad()` first.
  std::span<const T> grad() const { return {node_->grad.data(), node_->grad.size()}; }
  std::span<T> mutable_grad() { return {node_->grad_data(), node_->value.size()}; }
  void zero_grad() { node_->grad.clear(); }

  Tensor clone() const;
  /// Same values, no gradient tracking.
  Tensor detach() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Append-only record of differentiable operations. Entries are appended in
/// execution order, which is a topological order; `backward` walks them in
/// reverse, visiting each exactly once.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Node<T>& out)>;

  void record(const std::shared_ptr<Node<T>>& out, BackwardFn fn);
  /// d loss / d x for every reachable requires-grad leaf; leaf gradients
  /// accumulate across calls until zeroed.
  void backward(const Tensor<T>& loss);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<Node<T>> out;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
};

/// Tape that ops record onto in the current thread, or nullptr.
template <typename T>
Tape<T>* active_tape();

/// Makes `tape` the active tape of this thread for the scope's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Backward pass over the active tape. Throws NotScalar for non-scalar loss.
template <typename T>
void backward(const Tensor<T>& loss);

/// Output node helper for op implementations: allocates the result and, when
/// a tape is active and some input needs gradients, records `fn`.
template <typename T>
Tensor<T> make_result(Shape shape, std::initializer_list<const Tensor<T>*> inputs);
template <typename T>
bool wants_grad(std::initializer_list<const Tensor<T>*> inputs);
template <typename T>
void attach_backward(Tensor<T>& out, typename Tape<T>::BackwardFn fn);

// ----- differentiable ops ---------------------------------------------------

enum class Elementwise { relu, sigmoid, add, mul, sub };

template <typename T>
Tensor<T> elementwise(Elementwise op, const Tensor<T>& x);
template <typename T>
Tensor<T> elementwise(Elementwise op, const Tensor<T>& a, const Tensor<T>& b);

/// Binary ops accept equal shapes or a size-1 operand on either side.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> log(const Tensor<T>& x);
/// Values clamped to [lo, hi]; gradient passes only where lo <= x <= hi.
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// x[n x in] * w[in x out] + bias[out], bias added to every row.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
/// [a | b] along the last axis; both must have the same number of rows.
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b);

/// Same values under a new shape of equal size.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// softmax(x / temperature) over a flat vector, max-subtracted.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, T temperature = T(1));

/// Normalizes the last axis (population variance), then gain * x + bias.
template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5));

/// Rows `index[i]` of x, stacked.
template <typename T>
Tensor<T> index_select(const Tensor<T>& x, std::span<const std::uint32_t> index);

/// out[j] = sum of rows i with ids[i] == j; out has `num_segments` rows.
/// No temporary beyond the output is allocated.
template <typename T>
Tensor<T> segment_sum(const Tensor<T>& values, std::span<const std::uint32_t> ids, std::size_t num_segments);

// ----- raw kernels (no autograd), exposed for fused ops ---------------------

namespace kernels {
/// c[m x n] += a[m x k] * b[k x n]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
/// da[m x k] += dc[m x n] * b^T
template <typename T>
void gemm_acc_bt(const T* dc, const T* b, T* da, std::size_t m, std::size_t k, std::size_t n);
/// db[k x n] += a^T * dc
template <typename T>
void gemm_acc_at(const T* a, const T* dc, T* db, std::size_t m, std::size_t k, std::size_t n);
}  // namespace kernels

}  // namespace hyper::tensor
