#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyper/core/hypergraph.hpp"
#include "hyper/posenc/posenc.hpp"
#include "hyper/relgraph/relation_graph.hpp"
#include "hyper/tensor/checkpoint.hpp"
#include "hyper/tensor/tensor.hpp"

namespace hyper::model {

using tensor::Tensor;

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t rel_layers = 6;  ///< T
  std::size_t ent_layers = 6;  ///< L
  posenc::Kind pos_kind = posenc::Kind::sinusoidal;
  std::uint64_t pos_seed = 0;
  relgraph::Mode rel_mode = relgraph::Mode::exclude_same_edge;

  posenc::PosEncConfig posenc() const { return {dim, 10000.0, pos_kind, pos_seed}; }
  void validate() const;
  /// key=value lines (stored in checkpoints).
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  bool operator==(const ModelConfig&) const = default;
};

/// Linear -> ReLU -> Linear.
template <typename T>
struct Mlp2 {
  Tensor<T> w1, b1, w2, b2;

  static Mlp2 init(std::size_t in, std::size_t hidden, std::size_t out, tensor::Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
};

/// Per-layer weights shared by both encoders: the alpha mixing scalar, the
/// update MLP over [h || agg] and the layer norm.
template <typename T>
struct LayerParams {
  Tensor<T> alpha;  ///< [1], initialised to 0.5
  Mlp2<T> update;   ///< 2d -> d -> d
  Tensor<T> ln_gain, ln_bias;
};

template <typename T>
struct EntityLayerParams : LayerParams<T> {
  Mlp2<T> relation_transform;  ///< d -> d -> d, applied to h_{r|q}^{(T)}
};

template <typename T>
struct ModelParams {
  posenc::EncPIParams<T> enc_pi;
  std::vector<LayerParams<T>> relation_layers;
  std::vector<EntityLayerParams<T>> entity_layers;
  Mlp2<T> decoder;  ///< d -> d -> 1

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  /// Stable, unique names; tensors alias the parameters.
  std::vector<std::pair<std::string, Tensor<T>>> named() const;
  std::vector<Tensor<T>> tensors() const;
  /// Deep copy with cleared gradients.
  ModelParams clone() const;
  void zero_grad();
  std::size_t parameter_count() const;
};

template <typename T>
tensor::Checkpoint to_checkpoint(const ModelConfig& cfg, const ModelParams<T>& params, const std::string& extra = {});
/// Throws ConfigMismatch if tensor shapes disagree with the stored config.
template <typename T>
ModelParams<T> params_from_checkpoint(const tensor::Checkpoint& ck, const ModelConfig& cfg);
/// Model section of the checkpoint's config text.
ModelConfig config_from_checkpoint(const tensor::Checkpoint& ck);

/// Per-graph structures reused across queries: the relation graph and its
/// pair table, flattened edge arrays and the positional encoding table.
template <typename T>
class GraphContext {
 public:
  GraphContext(const KnowledgeHypergraph& graph, const ModelConfig& cfg);

  const KnowledgeHypergraph& graph() const { return *graph_; }
  const relgraph::RelationGraph& relation_graph() const { return rel_graph_; }
  /// Distinct (a, b) labels of the relation graph; x_{a,b} rows follow this order.
  const std::vector<relgraph::PositionPair>& pairs() const { return pairs_; }
  std::span<const std::uint32_t> rel_src() const { return rel_src_; }
  std::span<const std::uint32_t> rel_dst() const { return rel_dst_; }
  std::span<const std::uint32_t> rel_pair() const { return rel_pair_; }

  std::span<const std::uint32_t> edge_offsets() const { return edge_offsets_; }
  std::span<const std::uint32_t> edge_entities() const { return edge_entities_; }
  std::span<const std::uint32_t> edge_relations() const { return edge_relations_; }

  /// [max_position x d]; row i is p_{i+1}.
  const Tensor<T>& positions() const { return positions_; }

 private:
  const KnowledgeHypergraph* graph_;
  relgraph::RelationGraph rel_graph_;
  std::vector<relgraph::PositionPair> pairs_;
  std::vector<std::uint32_t> rel_src_, rel_dst_, rel_pair_;
  std::vector<std::uint32_t> edge_offsets_, edge_entities_, edge_relations_;
  Tensor<T> positions_;
};

inline constexpr std::size_t kNoEdge = std::numeric_limits<std::size_t>::max();

/// Optional instrumentation of one forward pass.
struct ForwardTrace {
  std::set<relgraph::PositionPair> enc_pi_pairs;  ///< pairs embedded by Enc_PI
  std::vector<std::size_t> skipped_edges;         ///< hyperedges masked out of entity message passing
};

struct ForwardOptions {
  /// Hyperedge removed from entity message passing (the query's own fact).
  std::size_t excluded_edge = kNoEdge;
  ForwardTrace* trace = nullptr;
};

// ----- fused aggregation kernels ----------------------------------------------

/// For every relation-graph edge (r' -> r, pair): agg[r] += (alpha*h[r'] +
/// (1-alpha)*p1) * x[pair]. Output [num_relations x d].
template <typename T>
Tensor<T> relation_aggregate(const Tensor<T>& h, const Tensor<T>& alpha, std::span<const T> p1, const Tensor<T>& x,
                             std::span<const std::uint32_t> src, std::span<const std::uint32_t> dst,
                             std::span<const std::uint32_t> pair);

/// For every hyperedge e and position i: agg[e(i)] +=
/// prod_{j != i}(alpha*h[e(j)] + (1-alpha)*p_j) * rel_msg[rho(e)].
/// Messages are never materialised: forward and backward each keep only
/// O(k*d) scratch per edge plus the [num_entities x d] output.
template <typename T>
Tensor<T> hyperedge_aggregate(const Tensor<T>& h, const Tensor<T>& alpha, const Tensor<T>& positions,
                              const Tensor<T>& rel_msg, std::span<const std::uint32_t> offsets,
                              std::span<const std::uint32_t> entities, std::span<const std::uint32_t> relations,
                              std::size_t excluded_edge = kNoEdge);

// ----- encoder stages -----------------------------------------------------------

/// h^{(0)}: all-ones row for q, zero rows elsewhere.
template <typename T>
Tensor<T> rel_init(std::size_t num_relations, RelationId q, std::size_t dim);

/// relu(layernorm(MLP([h || agg])) + h).
template <typename T>
Tensor<T> node_update(const Tensor<T>& h, const Tensor<T>& agg, const LayerParams<T>& layer);

template <typename T>
Tensor<T> rel_layer(const Tensor<T>& h, const GraphContext<T>& ctx, const Tensor<T>& x, const LayerParams<T>& layer);

/// h_{r|q}^{(T)} for every relation r.
template <typename T>
Tensor<T> rel_forward(const GraphContext<T>& ctx, RelationId q, const ModelParams<T>& params,
                      const ModelConfig& cfg, ForwardTrace* trace = nullptr);

/// h_v^{(0)} = sum_{i != t} [v = u_i] (p_i + h_q).
template <typename T>
Tensor<T> ent_init(std::size_t num_entities, const Query& query, const Tensor<T>& rel_embeddings,
                   const Tensor<T>& positions);

template <typename T>
Tensor<T> ent_layer(const Tensor<T>& h, const GraphContext<T>& ctx, const Tensor<T>& rel_embeddings,
                    const EntityLayerParams<T>& layer, std::size_t excluded_edge = kNoEdge);

/// h_{v|q}^{(L)} for every entity, given relation embeddings conditioned on q.
template <typename T>
Tensor<T> encode_entities(const GraphContext<T>& ctx, const Query& query, const Tensor<T>& rel_embeddings,
                          const ModelParams<T>& params, const ForwardOptions& options = {});

/// Decoder logits for the given rows of an entity embedding matrix.
template <typename T>
Tensor<T> decode_rows(const Tensor<T>& entity_embeddings, std::span<const std::uint32_t> rows,
                      const ModelParams<T>& params);

/// p(v | q) for every v in V.
template <typename T>
std::vector<T> score_query(const GraphContext<T>& ctx, const Query& query, const ModelParams<T>& params,
                           const ModelConfig& cfg, const ForwardOptions& options = {});

/// Row i equals score_query(queries[i]); relation-encoder passes are shared
/// between queries with the same relation.
template <typename T>
std::vector<std::vector<T>> score_batch(const GraphContext<T>& ctx, std::span<const Query> queries,
                                        const ModelParams<T>& params, const ModelConfig& cfg);

/// Throws UnknownRelation / UnknownEntity / PositionOutOfRange for a query
/// that does not fit the graph.
void check_query(const KnowledgeHypergraph& graph, const Query& query);

}  // namespace hyper::model
