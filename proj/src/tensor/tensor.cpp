#include "hyper/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hyper::tensor {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(shape_size(shape), T(0));
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  auto t = zeros(std::move(shape));
  std::fill(t.node_->value.begin(), t.node_->value.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values) {
  if (shape_size(shape) != values.size()) {
    throw ShapeMismatch("shape " + shape_string(shape) + " does not hold " + std::to_string(values.size()) +
                        " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->value.assign(values.begin(), values.end());
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> values) {
  auto t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw NotScalar("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  auto node = std::make_shared<Node<T>>();
  node->shape = node_->shape;
  node->value = node_->value;
  node->grad = node_->grad;
  node->requires_grad = node_->requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto node = std::make_shared<Node<T>>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------

template <typename T>
void Tape<T>::record(const std::shared_ptr<Node<T>>& out, BackwardFn fn) {
  out->recorded = true;
  entries_.push_back({out, std::move(fn)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.size() != 1) throw NotScalar("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  std::size_t end = entries_.size();
  while (end > 0 && entries_[end - 1].out.get() != loss.node()) --end;
  if (end == 0) {
    if (loss.node()->requires_grad) loss.node()->grad_data()[0] += T(1);
    return;
  }
  // Intermediate gradients are per-pass scratch.
  for (std::size_t i = 0; i < end; ++i) entries_[i].out->grad.clear();
  loss.node()->grad_data()[0] = T(1);
  for (std::size_t i = end; i-- > 0;) {
    auto& entry = entries_[i];
    if (entry.out->grad.empty()) continue;
    entry.fn(*entry.out);
  }
}

namespace {
template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;
}

template <typename T>
Tape<T>* active_tape() {
  return g_active_tape<T>;
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(g_active_tape<T>) {
  g_active_tape<T> = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  g_active_tape<T> = previous_;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) throw NotScalar("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  auto* tape = active_tape<T>();
  if (tape == nullptr) throw Error("backward() called without an active tape");
  tape->backward(loss);
}

template <typename T>
bool wants_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (active_tape<T>() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
Tensor<T> make_result(Shape shape, std::initializer_list<const Tensor<T>*> inputs) {
  auto out = Tensor<T>::zeros(std::move(shape));
  if (wants_grad<T>(inputs)) out.set_requires_grad(true);
  return out;
}

template <typename T>
void attach_backward(Tensor<T>& out, typename Tape<T>::BackwardFn fn) {
  if (!out.requires_grad()) return;
  active_tape<T>()->record(out.node_ptr(), std::move(fn));
}

// ----- kernels --------------------------------------------------------------

namespace kernels {

template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* __restrict crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_acc_bt(const T* dc, const T* b, T* da, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* __restrict dcrow = dc + i * n;
    T* darow = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T* __restrict brow = b + p * n;
      T acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[p] += acc;
    }
  }
}

template <typename T>
void gemm_acc_at(const T* a, const T* dc, T* db, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* __restrict dcrow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      T* __restrict dbrow = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

}  // namespace kernels

// ----- elementwise ------------------------------------------------------------

namespace {

template <typename T>
void check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape() || a.size() == 1 || b.size() == 1) return;
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                      shape_string(b.shape()));
}

enum class BinOp { add, sub, mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinOp op, const char* name) {
  check_binary(a, b, name);
  const bool a_scalar = a.size() == 1 && b.size() != 1;
  const bool b_scalar = b.size() == 1 && a.size() != 1;
  const Shape& shape = a_scalar ? b.shape() : a.shape();
  auto out = make_result<T>(shape, {&a, &b});
  const std::size_t n = out.size();
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const T x = pa[a_scalar ? 0 : i];
    const T y = pb[b_scalar ? 0 : i];
    po[i] = op == BinOp::add ? x + y : op == BinOp::sub ? x - y : x * y;
  }
  auto na = a.node_ptr();
  auto nb = b.node_ptr();
  attach_backward<T>(out, [na, nb, op, a_scalar, b_scalar](Node<T>& o) {
    const std::size_t n = o.value.size();
    const T* g = o.grad.data();
    if (na->requires_grad) {
      T* ga = na->grad_data();
      for (std::size_t i = 0; i < n; ++i) {
        T d = g[i];
        if (op == BinOp::mul) d *= nb->value[b_scalar ? 0 : i];
        ga[a_scalar ? 0 : i] += d;
      }
    }
    if (nb->requires_grad) {
      T* gb = nb->grad_data();
      for (std::size_t i = 0; i < n; ++i) {
        T d = g[i];
        if (op == BinOp::sub) d = -d;
        if (op == BinOp::mul) d *= na->value[a_scalar ? 0 : i];
        gb[b_scalar ? 0 : i] += d;
      }
    }
  });
  return out;
}

template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, F f, DF df) {
  auto out = make_result<T>(x.shape(), {&x});
  const T* px = x.data();
  T* po = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) po[i] = f(px[i]);
  auto nx = x.node_ptr();
  attach_backward<T>(out, [nx, df](Node<T>& o) {
    T* gx = nx->grad_data();
    for (std::size_t i = 0; i < o.value.size(); ++i) gx[i] += o.grad[i] * df(nx->value[i], o.value[i]);
  });
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::add, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::sub, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  return unary(
      x, [lo, hi](T v) { return std::clamp(v, lo, hi); },
      [lo, hi](T v, T) { return (v >= lo && v <= hi) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> elementwise(Elementwise op, const Tensor<T>& x) {
  switch (op) {
    case Elementwise::relu:
      return relu(x);
    case Elementwise::sigmoid:
      return sigmoid(x);
    default:
      throw Error("elementwise: binary op given one argument");
  }
}

template <typename T>
Tensor<T> elementwise(Elementwise op, const Tensor<T>& a, const Tensor<T>& b) {
  switch (op) {
    case Elementwise::add:
      return add(a, b);
    case Elementwise::sub:
      return sub(a, b);
    case Elementwise::mul:
      return mul(a, b);
    default:
      throw Error("elementwise: unary op given two arguments");
  }
}

// ----- linear algebra -------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeMismatch("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto out = make_result<T>({m, n}, {&a, &b});
  kernels::gemm_acc(a.data(), b.data(), out.data(), m, k, n);
  auto na = a.node_ptr();
  auto nb = b.node_ptr();
  attach_backward<T>(out, [na, nb, m, k, n](Node<T>& o) {
    if (na->requires_grad) kernels::gemm_acc_bt(o.grad.data(), nb->value.data(), na->grad_data(), m, k, n);
    if (nb->requires_grad) kernels::gemm_acc_at(na->value.data(), o.grad.data(), nb->grad_data(), m, k, n);
  });
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || x.cols() != weight.dim(0) || bias.size() != weight.dim(1)) {
    throw ShapeMismatch("linear: x " + shape_string(x.shape()) + ", weight " + shape_string(weight.shape()) +
                        ", bias " + shape_string(bias.shape()));
  }
  const std::size_t m = x.rows(), k = weight.dim(0), n = weight.dim(1);
  Shape shape = x.shape();
  shape.back() = n;
  auto out = make_result<T>(shape, {&x, &weight, &bias});
  T* po = out.data();
  for (std::size_t i = 0; i < m; ++i) std::copy(bias.data(), bias.data() + n, po + i * n);
  kernels::gemm_acc(x.data(), weight.data(), po, m, k, n);
  auto nx = x.node_ptr();
  auto nw = weight.node_ptr();
  auto nb = bias.node_ptr();
  attach_backward<T>(out, [nx, nw, nb, m, k, n](Node<T>& o) {
    const T* g = o.grad.data();
    if (nx->requires_grad) kernels::gemm_acc_bt(g, nw->value.data(), nx->grad_data(), m, k, n);
    if (nw->requires_grad) kernels::gemm_acc_at(nx->value.data(), g, nw->grad_data(), m, k, n);
    if (nb->requires_grad) {
      T* gb = nb->grad_data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
  return out;
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeMismatch("concat_cols: " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
  auto out = make_result<T>({m, ca + cb}, {&a, &b});
  T* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(a.data() + i * ca, a.data() + (i + 1) * ca, po + i * (ca + cb));
    std::copy(b.data() + i * cb, b.data() + (i + 1) * cb, po + i * (ca + cb) + ca);
  }
  auto na = a.node_ptr();
  auto nb = b.node_ptr();
  attach_backward<T>(out, [na, nb, m, ca, cb](Node<T>& o) {
    const T* g = o.grad.data();
    if (na->requires_grad) {
      T* ga = na->grad_data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * (ca + cb) + j];
    }
    if (nb->requires_grad) {
      T* gb = nb->grad_data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * (ca + cb) + ca + j];
    }
  });
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeMismatch("reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  auto out = make_result<T>(std::move(shape), {&x});
  std::copy(x.data(), x.data() + x.size(), out.data());
  auto nx = x.node_ptr();
  attach_backward<T>(out, [nx](Node<T>& o) {
    T* gx = nx->grad_data();
    for (std::size_t i = 0; i < o.value.size(); ++i) gx[i] += o.grad[i];
  });
  return out;
}

// ----- reductions -------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  auto out = make_result<T>({1}, {&x});
  T acc = 0;
  for (T v : x.values()) acc += v;
  out.data()[0] = acc;
  auto nx = x.node_ptr();
  attach_backward<T>(out, [nx](Node<T>& o) {
    T* gx = nx->grad_data();
    for (std::size_t i = 0; i < nx->value.size(); ++i) gx[i] += o.grad[0];
  });
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.size() == 0) throw ShapeMismatch("mean of an empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, T temperature) {
  if (x.size() == 0) throw ShapeMismatch("softmax of an empty tensor");
  if (!(temperature > T(0))) throw Error("softmax temperature must be positive");
  auto out = make_result<T>(x.shape(), {&x});
  const std::size_t n = x.size();
  const T* px = x.data();
  T* py = out.data();
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, px[i] / temperature);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    py[i] = std::exp(px[i] / temperature - mx);
    total += py[i];
  }
  for (std::size_t i = 0; i < n; ++i) py[i] /= total;
  auto nx = x.node_ptr();
  attach_backward<T>(out, [nx, temperature](Node<T>& o) {
    const std::size_t n = o.value.size();
    T dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += o.grad[i] * o.value[i];
    T* gx = nx->grad_data();
    for (std::size_t i = 0; i < n; ++i) gx[i] += o.value[i] * (o.grad[i] - dot) / temperature;
  });
  return out;
}

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const std::size_t d = x.cols();
  if (d == 0 || gain.size() != d || bias.size() != d) {
    throw ShapeMismatch("layernorm: x " + shape_string(x.shape()) + ", gain " + shape_string(gain.shape()) +
                        ", bias " + shape_string(bias.shape()));
  }
  const std::size_t rows = x.rows();
  auto out = make_result<T>(x.shape(), {&x, &gain, &bias});
  auto rstd = std::make_shared<Buffer<T>>(rows);
  auto xhat = std::make_shared<Buffer<T>>(x.size());
  const T* px = x.data();
  const T* pg = gain.data();
  const T* pb = bias.data();
  T* py = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = px + r * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T xh = (row[j] - mu) * rs;
      (*xhat)[r * d + j] = xh;
      py[r * d + j] = xh * pg[j] + pb[j];
    }
  }
  auto nx = x.node_ptr();
  auto ng = gain.node_ptr();
  auto nb = bias.node_ptr();
  attach_backward<T>(out, [nx, ng, nb, rstd, xhat, rows, d](Node<T>& o) {
    const T* g = o.grad.data();
    const T* pg = ng->value.data();
    T* gx = nx->requires_grad ? nx->grad_data() : nullptr;
    T* gg = ng->requires_grad ? ng->grad_data() : nullptr;
    T* gb = nb->requires_grad ? nb->grad_data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* gr = g + r * d;
      const T* xh = xhat->data() + r * d;
      if (gg)
        for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * xh[j];
      if (gb)
        for (std::size_t j = 0; j < d; ++j) gb[j] += gr[j];
      if (gx) {
        T m1 = 0, m2 = 0;
        for (std::size_t j = 0; j < d; ++j) {
          const T dxh = gr[j] * pg[j];
          m1 += dxh;
          m2 += dxh * xh[j];
        }
        m1 /= static_cast<T>(d);
        m2 /= static_cast<T>(d);
        const T rs = (*rstd)[r];
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += rs * (gr[j] * pg[j] - m1 - xh[j] * m2);
      }
    }
  });
  return out;
}

// ----- gather / scatter -------------------------------------------------------

template <typename T>
Tensor<T> index_select(const Tensor<T>& x, std::span<const std::uint32_t> index) {
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  for (auto i : index) {
    if (i >= n) throw IdOutOfRange("index_select: row " + std::to_string(i) + " of " + std::to_string(n));
  }
  Shape shape = x.shape();
  if (shape.size() <= 1) shape = {index.size()};
  else shape[0] = index.size();
  auto out = make_result<T>(shape, {&x});
  for (std::size_t r = 0; r < index.size(); ++r) {
    std::copy(x.data() + index[r] * d, x.data() + (index[r] + 1) * d, out.data() + r * d);
  }
  auto nx = x.node_ptr();
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  attach_backward<T>(out, [nx, idx = std::move(idx), d](Node<T>& o) {
    T* gx = nx->grad_data();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) gx[idx[r] * d + j] += o.grad[r * d + j];
    }
  });
  return out;
}

template <typename T>
Tensor<T> segment_sum(const Tensor<T>& values, std::span<const std::uint32_t> ids, std::size_t num_segments) {
  const std::size_t d = values.rank() <= 1 ? 1 : values.cols();
  const std::size_t n = values.size() / (d == 0 ? 1 : d);
  if (ids.size() != n) {
    throw ShapeMismatch("segment_sum: " + std::to_string(ids.size()) + " ids for " + std::to_string(n) + " rows");
  }
  for (auto id : ids) {
    if (id >= num_segments) {
      throw IdOutOfRange("segment_sum: id " + std::to_string(id) + " >= " + std::to_string(num_segments));
    }
  }
  Shape shape = values.rank() <= 1 ? Shape{num_segments} : Shape{num_segments, d};
  auto out = make_result<T>(shape, {&values});
  T* po = out.data();
  const T* pv = values.data();
  for (std::size_t i = 0; i < n; ++i) {
    T* dst = po + ids[i] * d;
    const T* src = pv + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
  auto nv = values.node_ptr();
  std::vector<std::uint32_t> seg(ids.begin(), ids.end());
  attach_backward<T>(out, [nv, seg = std::move(seg), d](Node<T>& o) {
    T* gv = nv->grad_data();
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const T* src = o.grad.data() + seg[i] * d;
      for (std::size_t j = 0; j < d; ++j) gv[i * d + j] += src[j];
    }
  });
  return out;
}

// ----- instantiations ---------------------------------------------------------

#define HYPER_INSTANTIATE(T)                                                                            \
  template class Tensor<T>;                                                                             \
  template class Tape<T>;                                                                               \
  template class TapeScope<T>;                                                                          \
  template Tape<T>* active_tape<T>();                                                                   \
  template void backward<T>(const Tensor<T>&);                                                          \
  template bool wants_grad<T>(std::initializer_list<const Tensor<T>*>);                                 \
  template Tensor<T> make_result<T>(Shape, std::initializer_list<const Tensor<T>*>);                   \
  template void attach_backward<T>(Tensor<T>&, typename Tape<T>::BackwardFn);                          \
  template Tensor<T> elementwise<T>(Elementwise, const Tensor<T>&);                                     \
  template Tensor<T> elementwise<T>(Elementwise, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                     \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                         \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                      \
  template Tensor<T> log<T>(const Tensor<T>&);                                                          \
  template Tensor<T> clamp<T>(const Tensor<T>&, T, T);                                                  \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> concat_cols<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                               \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                          \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                         \
  template Tensor<T> softmax<T>(const Tensor<T>&, T);                                                   \
  template Tensor<T> layernorm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);             \
  template Tensor<T> index_select<T>(const Tensor<T>&, std::span<const std::uint32_t>);                \
  template Tensor<T> segment_sum<T>(const Tensor<T>&, std::span<const std::uint32_t>, std::size_t);    \
  template void kernels::gemm_acc<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);    \
  template void kernels::gemm_acc_bt<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t); \
  template void kernels::gemm_acc_at<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);

HYPER_INSTANTIATE(float)
HYPER_INSTANTIATE(double)

#undef HYPER_INSTANTIATE

}  // namespace hyper::tensor
