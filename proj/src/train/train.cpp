#include "hyper/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "hyper/eval/evaluate.hpp"

namespace hyper::train {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(tensor::uniform01(rng) * static_cast<double>(n));
}

}  // namespace

void TrainConfig::validate() const {
  if (negatives < 1) throw Error("negatives must be at least 1");
  if (!(adv_temperature > 0)) throw Error("adversarial temperature must be positive");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (threads < 1) throw Error("threads must be at least 1");
}

tensor::AdamWConfig TrainConfig::optimizer() const {
  tensor::AdamWConfig c;
  c.lr = lr;
  c.weight_decay = weight_decay;
  return c;
}

TrainingSample sample_training_query(const KnowledgeHypergraph& graph, Rng& rng) {
  if (graph.empty()) throw EmptyGraph("cannot sample a training query from an empty graph");
  TrainingSample s;
  s.edge = uniform_index(rng, graph.num_edges());
  const auto& edge = graph.edge(s.edge);
  const std::size_t t = 1 + uniform_index(rng, edge.arity());
  s.query = query_of_fact(edge, t);
  s.truth = edge.at(t);
  return s;
}

std::vector<EntityId> sample_negatives(const KnowledgeHypergraph& graph, const Query& query, EntityId truth,
                                       std::size_t n, bool strict, const FactSet& known, Rng& rng) {
  if (n < 1) throw Error("negatives must be at least 1");
  const auto edge = complete_query(query, truth);
  std::vector<EntityId> pool;
  pool.reserve(graph.num_entities());
  for (std::uint32_t v = 0; v < graph.num_entities(); ++v) {
    const EntityId cand{v};
    if (cand == truth) continue;
    if (strict && known.contains_with(edge, query.masked_position, cand)) continue;
    pool.push_back(cand);
  }
  if (pool.empty()) throw ExhaustedPool("no entity left to corrupt the query with");
  std::vector<EntityId> out(n);
  for (auto& v : out) v = pool[uniform_index(rng, pool.size())];
  return out;
}

template <typename T>
Tensor<T> nssa_loss(const Tensor<T>& p_true, const Tensor<T>& p_negs, T tau) {
  constexpr T lo = T(1e-7);
  constexpr T hi = T(1) - T(1e-7);
  const auto one = Tensor<T>::scalar(T(1));
  auto pos = tensor::log(tensor::clamp(p_true, lo, hi));
  auto neg = tensor::log(tensor::sub(one, tensor::clamp(p_negs, lo, hi)));
  auto weights = tensor::softmax(neg.detach(), tau);
  return tensor::scale(tensor::add(tensor::sum(pos), tensor::sum(tensor::mul(weights, neg))), T(-1));
}

template <typename T>
Tensor<T> sample_loss(const model::GraphContext<T>& ctx, const TrainingSample& sample,
                      std::span<const EntityId> negatives, const model::ModelParams<T>& params,
                      const model::ModelConfig& cfg, T tau) {
  auto rel = model::rel_forward(ctx, sample.query.relation, params, cfg);
  model::ForwardOptions options;
  options.excluded_edge = sample.edge;
  auto h = model::encode_entities(ctx, sample.query, rel, params, options);
  const std::uint32_t truth = sample.truth.index;
  std::vector<std::uint32_t> negs(negatives.size());
  for (std::size_t i = 0; i < negs.size(); ++i) negs[i] = negatives[i].index;
  auto p_true = tensor::sigmoid(model::decode_rows(h, std::span<const std::uint32_t>(&truth, 1), params));
  auto p_negs = tensor::sigmoid(model::decode_rows(h, negs, params));
  return nssa_loss(p_true, p_negs, tau);
}

template <typename T>
double train_step(const model::GraphContext<T>& ctx, const FactSet& known, model::ModelParams<T>& params,
                  tensor::AdamWState<T>& optimizer, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  Rng& rng) {
  const auto& graph = ctx.graph();
  const std::size_t batch = cfg.batch_size;
  std::vector<TrainingSample> samples;
  std::vector<std::vector<EntityId>> negatives;
  for (std::size_t i = 0; i < batch; ++i) {
    samples.push_back(sample_training_query(graph, rng));
    negatives.push_back(sample_negatives(graph, samples.back().query, samples.back().truth, cfg.negatives,
                                         cfg.strict_negatives, known, rng));
  }

  const T tau = static_cast<T>(cfg.adv_temperature);
  const T inv_batch = T(1) / static_cast<T>(batch);
  std::vector<double> losses(batch, 0.0);
  auto run = [&](model::ModelParams<T>& p, std::size_t worker, std::size_t workers) {
    tensor::Tape<T> tape;
    tensor::TapeScope<T> scope(tape);
    for (std::size_t i = worker; i < batch; i += workers) {
      auto loss = sample_loss(ctx, samples[i], negatives[i], p, model_cfg, tau);
      losses[i] = static_cast<double>(loss.item());
      tape.backward(tensor::scale(loss, inv_batch));
      tape.clear();
    }
  };

  params.zero_grad();
  const std::size_t workers = std::min(cfg.threads, batch);
  if (workers <= 1) {
    run(params, 0, 1);
  } else {
    std::vector<model::ModelParams<T>> replicas;
    for (std::size_t w = 0; w < workers; ++w) replicas.push_back(params.clone());
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(replicas[w], w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    auto targets = params.tensors();
    for (std::size_t w = 0; w < workers; ++w) {
      auto sources = replicas[w].tensors();
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!sources[i].has_grad()) continue;
        auto dst = targets[i].mutable_grad();
        auto src = sources[i].grad();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
      }
    }
  }

  auto tensors = params.tensors();
  tensor::adamw_step<T>(tensors, optimizer);
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(batch);
}

TrainLog::TrainLog(std::string path) : path_(std::move(path)) {
  if (!path_.empty() && !std::filesystem::exists(path_)) {
    std::ofstream out(path_);
    if (!out) throw IoError("cannot write training log '" + path_ + "'");
    out << "step\tloss\tval_mrr\n";
  }
}

void TrainLog::write(const LogRow& row) {
  rows_.push_back(row);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to training log '" + path_ + "'");
  out << row.step << '\t' << row.loss << '\t';
  if (row.val_mrr >= 0) out << row.val_mrr;
  out << '\n';
}

template <typename T>
double validation_mrr(const Validation<T>& validation, const model::ModelParams<T>& params,
                      const model::ModelConfig& model_cfg, const TrainConfig& cfg) {
  std::span<const Hyperedge> facts = validation.facts;
  if (cfg.val_max_facts > 0 && facts.size() > cfg.val_max_facts) facts = facts.first(cfg.val_max_facts);
  const auto report = eval::evaluate_model(*validation.ctx, facts, validation.filter, params, model_cfg, cfg.threads);
  return report.overall.mrr;
}

namespace {

/// Shared bookkeeping of best-checkpoint selection and stopping rules.
template <typename T>
struct Selector {
  const TrainConfig& cfg;
  TrainResult<T>& result;
  std::size_t stale = 0;

  /// Returns true when training should stop.
  bool observe(double val, std::size_t step, const model::ModelParams<T>& params) {
    if (val > result.best_val_mrr) {
      result.best_val_mrr = val;
      result.best_step = step;
      result.best = params.clone();
      stale = 0;
    } else {
      ++stale;
    }
    if (cfg.target_val_mrr && result.best_val_mrr >= *cfg.target_val_mrr) return true;
    return cfg.patience > 0 && stale >= cfg.patience;
  }
};

template <typename T>
void emit(TrainLog* log, TrainResult<T>& result, const LogRow& row) {
  result.log.push_back(row);
  if (log) log->write(row);
}

}  // namespace

template <typename T>
TrainResult<T> train(const model::GraphContext<T>& ctx, const Validation<T>& validation, model::ModelParams<T> params,
                     const model::ModelConfig& model_cfg, const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  const auto& graph = ctx.graph();
  const FactSet known(graph.edges());
  const bool validating = validation.ctx != nullptr && !validation.facts.empty();
  const std::size_t per_epoch = cfg.batches_per_epoch > 0
                                    ? cfg.batches_per_epoch
                                    : std::max<std::size_t>(1, (graph.num_edges() + cfg.batch_size - 1) / cfg.batch_size);
  tensor::AdamWState<T> optimizer;
  optimizer.config = cfg.optimizer();
  Rng rng(cfg.seed);
  TrainResult<T> result;
  Selector<T> selector{cfg, result};

  bool stop = false;
  if (validating) {
    const double val = validation_mrr(validation, params, model_cfg, cfg);
    emit(log, result, {0, 0.0, val});
    stop = selector.observe(val, 0, params);
  }
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    double total = 0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      total += train_step(ctx, known, params, optimizer, model_cfg, cfg, rng);
      ++step;
    }
    LogRow row{step, total / static_cast<double>(per_epoch), -1};
    if (validating) {
      row.val_mrr = validation_mrr(validation, params, model_cfg, cfg);
      stop = selector.observe(row.val_mrr, step, params);
    }
    emit(log, result, row);
  }
  result.steps_run = step;
  if (!validating) {
    result.best = std::move(params);
    result.best_step = step;
  }
  return result;
}

std::vector<double> PretrainMix::weights() const {
  double total = 0;
  for (const auto& m : members) total += static_cast<double>(m.graph->num_edges());
  std::vector<double> w;
  for (const auto& m : members) {
    w.push_back(total > 0 ? static_cast<double>(m.graph->num_edges()) / total : 1.0 / members.size());
  }
  return w;
}

std::size_t PretrainMix::draw(Rng& rng) const {
  if (members.size() <= 1) return 0;
  const auto w = weights();
  double u = tensor::uniform01(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return w.size() - 1;
}

Holdout hold_out(const KnowledgeHypergraph& graph, double fraction, Rng& rng) {
  std::vector<std::size_t> order(graph.num_edges());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::size_t count = static_cast<std::size_t>(std::round(fraction * static_cast<double>(order.size())));
  if (fraction > 0 && count == 0 && order.size() > 1) count = 1;
  std::vector<char> held(order.size(), 0);
  for (std::size_t i = 0; i < count; ++i) held[order[i]] = 1;

  GraphBuilder builder;
  for (const auto& name : graph.entities().names()) builder.add_entity(name);
  for (std::uint32_t r = 0; r < graph.num_relations(); ++r) {
    builder.add_relation(graph.relation_name(RelationId{r}), graph.arity(RelationId{r}));
  }
  Holdout out;
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    if (held[e]) out.held_out.push_back(graph.edge(e));
    else builder.add_edge(graph.edge(e));
  }
  out.graph = std::move(builder).build();
  return out;
}

template <typename T>
TrainResult<T> pretrain(const PretrainMix& mix, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                        TrainLog* log) {
  cfg.validate();
  if (mix.members.empty()) throw Error("pretraining needs at least one graph");
  Rng split_rng(cfg.seed ^ 0x5deece66dull);
  std::deque<Holdout> holdouts;
  std::deque<model::GraphContext<T>> contexts;
  std::vector<FactSet> known;
  std::vector<Validation<T>> validations;
  for (const auto& m : mix.members) {
    holdouts.push_back(hold_out(*m.graph, 0.05, split_rng));
    contexts.emplace_back(holdouts.back().graph, model_cfg);
    known.emplace_back(holdouts.back().graph.edges());
    Validation<T> v;
    v.ctx = &contexts.back();
    v.facts = holdouts.back().held_out;
    v.filter = FactSet(m.graph->edges());
    validations.push_back(std::move(v));
  }

  auto params = model::ModelParams<T>::init(model_cfg, cfg.seed);
  tensor::AdamWState<T> optimizer;
  optimizer.config = cfg.optimizer();
  Rng rng(cfg.seed);
  TrainResult<T> result;
  Selector<T> selector{cfg, result};
  auto validate_all = [&] {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& v : validations) {
      if (v.facts.empty()) continue;
      sum += validation_mrr(v, params, model_cfg, cfg);
      ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : -1.0;
  };

  double window = 0;
  std::size_t window_steps = 0;
  std::size_t step = 0;
  bool any_validation = false;
  for (; step < cfg.steps;) {
    const std::size_t g = mix.draw(rng);
    window += train_step(contexts[g], known[g], params, optimizer, model_cfg, cfg, rng);
    ++window_steps;
    ++step;
    const bool boundary = cfg.val_every > 0 && step % cfg.val_every == 0;
    if (boundary || step == cfg.steps) {
      LogRow row{step, window / static_cast<double>(window_steps), validate_all()};
      window = 0;
      window_steps = 0;
      bool stop = false;
      if (row.val_mrr >= 0) {
        any_validation = true;
        stop = selector.observe(row.val_mrr, step, params);
      }
      emit(log, result, row);
      if (stop) break;
    }
  }
  result.steps_run = step;
  if (!any_validation) {
    result.best = std::move(params);
    result.best_step = step;
  }
  return result;
}

template <typename T>
TrainResult<T> finetune(const tensor::Checkpoint& checkpoint, const model::GraphContext<T>& ctx,
                        const Validation<T>& validation, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                        TrainLog* log) {
  const auto stored = model::config_from_checkpoint(checkpoint);
  if (!(stored == model_cfg)) {
    throw ConfigMismatch("checkpoint model configuration differs from the requested one:\n" + stored.to_text() +
                         "versus\n" + model_cfg.to_text());
  }
  auto params = model::params_from_checkpoint<T>(checkpoint, model_cfg);
  return train(ctx, validation, std::move(params), model_cfg, cfg, log);
}

#define HYPER_INSTANTIATE(T)                                                                                     \
  template Tensor<T> nssa_loss<T>(const Tensor<T>&, const Tensor<T>&, T);                                       \
  template Tensor<T> sample_loss<T>(const model::GraphContext<T>&, const TrainingSample&,                       \
                                    std::span<const EntityId>, const model::ModelParams<T>&,                    \
                                    const model::ModelConfig&, T);                                              \
  template double train_step<T>(const model::GraphContext<T>&, const FactSet&, model::ModelParams<T>&,          \
                                tensor::AdamWState<T>&, const model::ModelConfig&, const TrainConfig&, Rng&);   \
  template double validation_mrr<T>(const Validation<T>&, const model::ModelParams<T>&,                         \
                                    const model::ModelConfig&, const TrainConfig&);                             \
  template TrainResult<T> train<T>(const model::GraphContext<T>&, const Validation<T>&, model::ModelParams<T>,  \
                                   const model::ModelConfig&, const TrainConfig&, TrainLog*);                   \
  template TrainResult<T> pretrain<T>(const PretrainMix&, const model::ModelConfig&, const TrainConfig&,        \
                                      TrainLog*);                                                               \
  template TrainResult<T> finetune<T>(const tensor::Checkpoint&, const model::GraphContext<T>&,                 \
                                      const Validation<T>&, const model::ModelConfig&, const TrainConfig&,      \
                                      TrainLog*);

HYPER_INSTANTIATE(float)
HYPER_INSTANTIATE(double)

#undef HYPER_INSTANTIATE

}  // namespace hyper::train
