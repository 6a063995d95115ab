#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hyper/relgraph/relation_graph.hpp"
#include "hyper/tensor/init.hpp"
#include "hyper/tensor/tensor.hpp"

namespace hyper::posenc {

/// Which vector p_a represents argument position a.
enum class Kind {
  sinusoidal,  ///< standard transformer sinusoid (default)
  all_one,     ///< p_a = 1 for every a (collapses positions)
  random,      ///< p_a ~ N(0, I), fixed per (seed, a)
  magnitude,   ///< p_a = a * 1 (unbounded)
};

Kind parse_kind(std::string_view text);
std::string_view to_string(Kind kind);

struct PosEncConfig {
  std::size_t dim = 64;
  double base = 10000.0;
  Kind kind = Kind::sinusoidal;
  std::uint64_t seed = 0;  ///< only used by Kind::random
};

/// Throws hyper::Error unless dim is even and positive.
void validate(const PosEncConfig& cfg);

/// False for d in {2, 4, 8}, where the sinusoid frequencies can collide and
/// injectivity of the pair encoding is not guaranteed.
bool injectivity_precondition(const PosEncConfig& cfg);

/// (p)_{2i} = sin(pos / base^{2i/d}), (p)_{2i+1} = cos(pos / base^{2i/d}).
std::vector<double> sinusoid(std::size_t pos, const PosEncConfig& cfg);

/// Angular frequencies base^{-2i/d}, i = 0..d/2-1.
std::vector<double> frequencies(const PosEncConfig& cfg);

/// p_pos under the configured kind.
std::vector<double> encode(std::size_t pos, const PosEncConfig& cfg);

/// [p_a || p_b], the 2d-dimensional input of the interaction MLP.
std::vector<double> pair_input(std::size_t a, std::size_t b, const PosEncConfig& cfg);

/// Rows p_1 .. p_count as a constant [count x d] tensor.
template <typename T>
tensor::Tensor<T> position_table(std::size_t count, const PosEncConfig& cfg);

/// Shared two-layer interaction MLP: [p_a || p_b] -> relu(. W1 + b1) W2 + b2.
template <typename T>
struct EncPIParams {
  tensor::Tensor<T> w1;  ///< [2d x d]
  tensor::Tensor<T> b1;  ///< [d]
  tensor::Tensor<T> w2;  ///< [d x d]
  tensor::Tensor<T> b2;  ///< [d]

  static EncPIParams init(std::size_t dim, tensor::Rng& rng);
};

/// x_{a,b} for every pair, stacked into [pairs x d].
template <typename T>
tensor::Tensor<T> enc_pi(std::span<const relgraph::PositionPair> pairs, const EncPIParams<T>& params,
                         const PosEncConfig& cfg);

/// Single-pair convenience wrapper.
template <typename T>
std::vector<T> enc_pi(std::size_t a, std::size_t b, const EncPIParams<T>& params, const PosEncConfig& cfg);

}  // namespace hyper::posenc
