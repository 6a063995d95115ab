#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hyper/core/hypergraph.hpp"
#include "hyper/model/model.hpp"

namespace hyper::eval {

struct Metrics {
  double mrr = 0;
  double hits1 = 0;
  double hits3 = 0;
  double hits10 = 0;
  std::size_t queries = 0;
};

struct Report {
  Metrics overall;
  std::map<std::size_t, Metrics> by_arity;
  std::map<std::string, Metrics> by_relation;
  /// Expected rank of every (fact, position) query, fact-major.
  std::vector<double> ranks;
};

/// Entities whose substitution at the masked position is not a filtered
/// fact, plus the truth. Ascending by index.
std::vector<EntityId> filtered_candidates(const KnowledgeHypergraph& graph, const Query& query, EntityId truth,
                                          const FactSet& filter);

/// 1 + #(score > truth) + #(ties other than truth) / 2, over `candidates`.
/// `scores` is indexed by entity.
double rank_of(std::span<const double> scores, EntityId truth, std::span<const EntityId> candidates);

/// Scores over all entities for one query of test fact `fact_index`.
using Scorer = std::function<std::vector<double>(const Query& query, std::size_t fact_index)>;

/// Every position of every test fact is a query; ranks are filtered and
/// metrics averaged over queries.
Report evaluate(const KnowledgeHypergraph& graph, std::span<const Hyperedge> test, const FactSet& filter,
                const Scorer& scorer, std::size_t threads = 1);

/// Model scorer over `ctx`. A test fact present in the graph is removed
/// from message passing while it is scored.
template <typename T>
Report evaluate_model(const model::GraphContext<T>& ctx, std::span<const Hyperedge> test, const FactSet& filter,
                      const model::ModelParams<T>& params, const model::ModelConfig& cfg, std::size_t threads = 1);

void accumulate(Metrics& m, double rank);
/// Turns sums into means.
void finalize(Metrics& m);

/// Flat JSON object: overall metrics, then `arity_<k>_<metric>` and
/// `relation_<name>_<metric>` keys.
std::string to_json(const Report& report);

}  // namespace hyper::eval
