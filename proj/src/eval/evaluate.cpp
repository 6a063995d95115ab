#include "hyper/eval/evaluate.hpp"

#include <algorithm>
#include <thread>

#include "json.hpp"

namespace hyper::eval {

std::vector<EntityId> filtered_candidates(const KnowledgeHypergraph& graph, const Query& query, EntityId truth,
                                          const FactSet& filter) {
  if (truth.index >= graph.num_entities()) throw UnknownEntity("truth entity outside graph");
  auto edge = complete_query(query, truth);
  std::vector<EntityId> out;
  for (std::uint32_t v = 0; v < graph.num_entities(); ++v) {
    const EntityId cand{v};
    if (cand == truth || !filter.contains_with(edge, query.masked_position, cand)) out.push_back(cand);
  }
  return out;
}

double rank_of(std::span<const double> scores, EntityId truth, std::span<const EntityId> candidates) {
  if (std::find(candidates.begin(), candidates.end(), truth) == candidates.end()) {
    throw TruthNotInCandidates("truth entity " + std::to_string(truth.index) + " is not a candidate");
  }
  if (truth.index >= scores.size()) throw IdOutOfRange("truth outside score vector");
  const double s = scores[truth.index];
  std::size_t greater = 0, ties = 0;
  for (EntityId c : candidates) {
    if (c == truth) continue;
    if (c.index >= scores.size()) throw IdOutOfRange("candidate outside score vector");
    const double x = scores[c.index];
    if (x > s) ++greater;
    else if (x == s) ++ties;
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

void accumulate(Metrics& m, double rank) {
  m.mrr += 1.0 / rank;
  m.hits1 += rank <= 1.0 ? 1 : 0;
  m.hits3 += rank <= 3.0 ? 1 : 0;
  m.hits10 += rank <= 10.0 ? 1 : 0;
  ++m.queries;
}

void finalize(Metrics& m) {
  if (m.queries == 0) return;
  const double n = static_cast<double>(m.queries);
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
}

Report evaluate(const KnowledgeHypergraph& graph, std::span<const Hyperedge> test, const FactSet& filter,
                const Scorer& scorer, std::size_t threads) {
  struct Job {
    std::size_t fact;
    std::size_t position;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < test.size(); ++f) {
    for (std::size_t t = 1; t <= test[f].arity(); ++t) jobs.push_back({f, t});
  }
  std::vector<double> ranks(jobs.size());
  auto run = [&](std::size_t worker, std::size_t workers) {
    for (std::size_t j = worker; j < jobs.size(); j += workers) {
      const auto& edge = test[jobs[j].fact];
      const auto query = query_of_fact(edge, jobs[j].position);
      const EntityId truth = edge.at(jobs[j].position);
      const auto candidates = filtered_candidates(graph, query, truth, filter);
      const auto scores = scorer(query, jobs[j].fact);
      ranks[j] = rank_of(scores, truth, candidates);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, jobs.size()));
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(w, threads);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Report report;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& edge = test[jobs[j].fact];
    accumulate(report.overall, ranks[j]);
    accumulate(report.by_arity[edge.arity()], ranks[j]);
    accumulate(report.by_relation[graph.relation_name(edge.relation)], ranks[j]);
  }
  finalize(report.overall);
  for (auto& [k, m] : report.by_arity) finalize(m);
  for (auto& [r, m] : report.by_relation) finalize(m);
  report.ranks = std::move(ranks);
  return report;
}

template <typename T>
Report evaluate_model(const model::GraphContext<T>& ctx, std::span<const Hyperedge> test, const FactSet& filter,
                      const model::ModelParams<T>& params, const model::ModelConfig& cfg, std::size_t threads) {
  const auto& graph = ctx.graph();
  // Relation-encoder passes are shared by all queries with the same relation.
  std::vector<tensor::Tensor<T>> rel_cache(graph.num_relations());
  for (const auto& edge : test) {
    auto& slot = rel_cache.at(edge.relation.index);
    if (!slot) slot = model::rel_forward(ctx, edge.relation, params, cfg);
  }
  std::vector<std::uint32_t> all(graph.num_entities());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<std::uint32_t>(v);
  Scorer scorer = [&](const Query& query, std::size_t fact) {
    model::check_query(graph, query);
    model::ForwardOptions options;
    if (auto idx = graph.find_edge(test[fact])) options.excluded_edge = *idx;
    auto h = model::encode_entities(ctx, query, rel_cache[query.relation.index], params, options);
    auto logits = model::decode_rows(h, all, params);
    // Ranking by logits equals ranking by probabilities and avoids ties from saturation.
    return std::vector<double>(logits.values().begin(), logits.values().end());
  };
  return evaluate(graph, test, filter, scorer, threads);
}

namespace {

void put(nlohmann::ordered_json& j, const std::string& prefix, const Metrics& m) {
  j[prefix + "mrr"] = m.mrr;
  j[prefix + "hits@1"] = m.hits1;
  j[prefix + "hits@3"] = m.hits3;
  j[prefix + "hits@10"] = m.hits10;
  j[prefix + "queries"] = m.queries;
}

}  // namespace

std::string to_json(const Report& report) {
  nlohmann::ordered_json j;
  put(j, "", report.overall);
  for (const auto& [k, m] : report.by_arity) put(j, "arity_" + std::to_string(k) + "_", m);
  for (const auto& [r, m] : report.by_relation) put(j, "relation_" + r + "_", m);
  return j.dump(2) + "\n";
}

template Report evaluate_model<float>(const model::GraphContext<float>&, std::span<const Hyperedge>, const FactSet&,
                                      const model::ModelParams<float>&, const model::ModelConfig&, std::size_t);
template Report evaluate_model<double>(const model::GraphContext<double>&, std::span<const Hyperedge>,
                                       const FactSet&, const model::ModelParams<double>&, const model::ModelConfig&,
                                       std::size_t);

}  // namespace hyper::eval
