#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyper/core/hypergraph.hpp"
#include "hyper/model/model.hpp"
#include "hyper/tensor/adamw.hpp"
#include "hyper/tensor/init.hpp"

namespace hyper::train {

using tensor::Rng;
using tensor::Tensor;

struct TrainConfig {
  std::size_t negatives = 256;
  double adv_temperature = 1.0;
  std::size_t batch_size = 8;
  double lr = 5e-4;
  double weight_decay = 0.01;
  std::size_t epochs = 10;
  /// 0 means ceil(|E| / batch_size).
  std::size_t batches_per_epoch = 0;
  /// Pretraining schedule.
  std::size_t steps = 30000;
  std::size_t val_every = 500;
  /// Upper bound on validation facts per graph (0 = all).
  std::size_t val_max_facts = 0;
  bool strict_negatives = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Stop once validation MRR reaches this value.
  std::optional<double> target_val_mrr;
  /// Stop after this many validations without improvement (0 = never).
  std::size_t patience = 0;

  void validate() const;
  tensor::AdamWConfig optimizer() const;
};

struct TrainingSample {
  Query query;
  EntityId truth;
  std::size_t edge = 0;  ///< index of the source fact in the graph
};

/// Uniform fact, then uniform masked position. Throws EmptyGraph.
TrainingSample sample_training_query(const KnowledgeHypergraph& graph, Rng& rng);

/// `n` entities other than `truth`, drawn with replacement. In strict mode
/// no draw completes the query to a fact of `known`. Throws ExhaustedPool.
std::vector<EntityId> sample_negatives(const KnowledgeHypergraph& graph, const Query& query, EntityId truth,
                                       std::size_t n, bool strict, const FactSet& known, Rng& rng);

/// -log p - sum_i w_i log(1 - p_i) with w = softmax(log(1 - p_negs) / tau),
/// probabilities clamped to [1e-7, 1 - 1e-7]. The weights carry no gradient.
template <typename T>
Tensor<T> nssa_loss(const Tensor<T>& p_true, const Tensor<T>& p_negs, T tau);

/// Loss of one sample with its own fact removed from message passing.
/// Gradients accumulate into `params` when a tape is active.
template <typename T>
Tensor<T> sample_loss(const model::GraphContext<T>& ctx, const TrainingSample& sample,
                      std::span<const EntityId> negatives, const model::ModelParams<T>& params,
                      const model::ModelConfig& cfg, T tau);

/// One batch: sample queries and negatives, mean loss over the batch (each
/// query scored with its own fact removed), backward, AdamW. Gradients of
/// parallel workers are summed in worker order. Returns the mean loss.
template <typename T>
double train_step(const model::GraphContext<T>& ctx, const FactSet& known, model::ModelParams<T>& params,
                  tensor::AdamWState<T>& optimizer, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  Rng& rng);

struct LogRow {
  std::size_t step = 0;
  double loss = 0;
  double val_mrr = -1;  ///< negative when no validation ran at this step
};

/// Appends `step\tloss\tval_mrr` rows; writes the header for a new file.
class TrainLog {
 public:
  explicit TrainLog(std::string path = {});
  void write(const LogRow& row);
  const std::vector<LogRow>& rows() const { return rows_; }

 private:
  std::string path_;
  std::vector<LogRow> rows_;
};

template <typename T>
struct TrainResult {
  model::ModelParams<T> best;
  double best_val_mrr = -1;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
  std::vector<LogRow> log;
};

/// Validation data for one graph: facts scored against `ctx`, ranked
/// against the filter.
template <typename T>
struct Validation {
  const model::GraphContext<T>* ctx = nullptr;
  std::vector<Hyperedge> facts;
  FactSet filter;
};

/// Epoch loop on a single graph with per-epoch validation and best-checkpoint
/// selection. Without validation facts the last parameters are kept.
template <typename T>
TrainResult<T> train(const model::GraphContext<T>& ctx, const Validation<T>& validation, model::ModelParams<T> params,
                     const model::ModelConfig& model_cfg, const TrainConfig& cfg, TrainLog* log = nullptr);

template <typename T>
double validation_mrr(const Validation<T>& validation, const model::ModelParams<T>& params,
                      const model::ModelConfig& model_cfg, const TrainConfig& cfg);

struct MixMember {
  const KnowledgeHypergraph* graph = nullptr;
  std::string name;
};

/// Graphs sampled with probability proportional to their edge counts.
struct PretrainMix {
  std::vector<MixMember> members;
  std::vector<double> weights() const;
  /// Member index drawn by weight.
  std::size_t draw(Rng& rng) const;
};

/// Splits off `fraction` of the facts as held-out validation facts; the rest
/// form the training graph (same vocabularies).
struct Holdout {
  KnowledgeHypergraph graph;
  std::vector<Hyperedge> held_out;
};
Holdout hold_out(const KnowledgeHypergraph& graph, double fraction, Rng& rng);

/// Step loop over the mix; each member keeps 5% of its facts for validation,
/// run every `val_every` steps (mean MRR over members).
template <typename T>
TrainResult<T> pretrain(const PretrainMix& mix, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                        TrainLog* log = nullptr);

/// Continues training a checkpoint on a target graph. Throws ConfigMismatch
/// when `model_cfg` differs from the checkpoint's configuration.
template <typename T>
TrainResult<T> finetune(const tensor::Checkpoint& checkpoint, const model::GraphContext<T>& ctx,
                        const Validation<T>& validation, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                        TrainLog* log = nullptr);

}  // namespace hyper::train
