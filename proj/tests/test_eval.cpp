#include <algorithm>

#include "doctest.h"
#include "hyper/eval/evaluate.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace hyper;
using namespace hyper::eval;

namespace {

/// Rank by sorting: position of the truth among candidates ordered by
/// descending score, averaged over the block of equal scores it sits in.
double sort_rank(const std::vector<double>& scores, EntityId truth, const std::vector<EntityId>& candidates) {
  std::vector<double> sorted;
  for (auto c : candidates) sorted.push_back(scores[c.index]);
  std::sort(sorted.rbegin(), sorted.rend());
  const double s = scores[truth.index];
  const auto first = std::find(sorted.begin(), sorted.end(), s) - sorted.begin();
  const auto last = sorted.rend() - std::find(sorted.rbegin(), sorted.rend(), s) - 1;
  return 1.0 + (static_cast<double>(first) + static_cast<double>(last)) / 2.0;
}

}  // namespace

TEST_CASE("filtered candidates drop other true answers but keep the truth") {
  const auto g = parse_facts("r\ta\tb\nr\ta\tc\nr\td\tb\n");
  const FactSet filter(g.edges());
  const Query q{g.relation("r"), {{g.entity("a"), 1}}, 2};
  const auto cands = filtered_candidates(g, q, g.entity("b"), filter);
  std::vector<std::string> names;
  for (auto c : cands) names.push_back(g.entity_name(c));
  CHECK(names == std::vector<std::string>{"a", "b", "d"});
  CHECK(std::is_sorted(cands.begin(), cands.end()));
  CHECK_THROWS_AS(filtered_candidates(g, q, EntityId{42}, filter), UnknownEntity);
}

TEST_CASE("expected rank with ties") {
  const std::vector<double> scores{0.5, 0.9, 0.5, 0.1, 0.5};
  const std::vector<EntityId> all{{0}, {1}, {2}, {3}, {4}};
  CHECK(rank_of(scores, EntityId{0}, all) == 3.0);
  CHECK(rank_of(scores, EntityId{1}, all) == 1.0);
  CHECK(rank_of(scores, EntityId{3}, all) == 5.0);
  const std::vector<EntityId> some{{0}, {3}};
  CHECK(rank_of(scores, EntityId{0}, some) == 1.0);
  CHECK_THROWS_AS(rank_of(scores, EntityId{1}, some), TruthNotInCandidates);
  const std::vector<EntityId> bad{{0}, {9}};
  CHECK_THROWS_AS(rank_of(scores, EntityId{0}, bad), IdOutOfRange);
}

TEST_CASE("rank agrees with a sort-based oracle") {
  tensor::Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 40;
    std::vector<double> scores(n);
    // Coarse values force plenty of ties.
    for (auto& s : scores) s = std::floor(tensor::uniform01(rng) * 6);
    std::vector<EntityId> cands;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (tensor::uniform01(rng) < 0.7) cands.push_back({v});
    }
    if (cands.empty()) cands.push_back({0});
    const auto truth = cands[static_cast<std::size_t>(tensor::uniform01(rng) * cands.size())];
    CHECK(rank_of(scores, truth, cands) == sort_rank(scores, truth, cands));
  }
}

TEST_CASE("a constant scorer ranks every query in the middle") {
  const auto g = support::random_graph(3, 20, 40, 4, 3, 2);
  const FactSet filter(g.edges());
  const std::vector<Hyperedge> test(g.edges().begin(), g.edges().begin() + 10);
  const auto report = evaluate(g, test, filter, [&](const Query&, std::size_t) {
    return std::vector<double>(g.num_entities(), 0.25);
  });
  double expected = 0;
  std::size_t q = 0;
  for (const auto& e : test) {
    for (std::size_t t = 1; t <= e.arity(); ++t, ++q) {
      const auto m = filtered_candidates(g, query_of_fact(e, t), e.at(t), filter).size();
      CHECK(report.ranks[q] == (m + 1) / 2.0);
      expected += 2.0 / (m + 1);
    }
  }
  CHECK(report.overall.queries == q);
  CHECK(report.overall.mrr == doctest::Approx(expected / q));
}

TEST_CASE("metrics match a brute-force recomputation") {
  const auto g = support::random_graph(4, 25, 60, 5, 4, 2);
  const FactSet filter(g.edges());
  const std::vector<Hyperedge> test(g.edges().begin(), g.edges().begin() + 20);
  auto scorer = [&](const Query& q, std::size_t fact) {
    tensor::Rng rng(fact * 31 + q.masked_position);
    std::vector<double> s(g.num_entities());
    for (auto& v : s) v = std::floor(tensor::uniform01(rng) * 10);
    return s;
  };
  const auto report = evaluate(g, test, filter, scorer, 3);
  double mrr = 0, h1 = 0, h3 = 0, h10 = 0;
  std::size_t n = 0;
  std::map<std::size_t, std::pair<double, std::size_t>> arity;
  for (std::size_t f = 0; f < test.size(); ++f) {
    for (std::size_t t = 1; t <= test[f].arity(); ++t) {
      const auto q = query_of_fact(test[f], t);
      const auto scores = scorer(q, f);
      const auto cands = filtered_candidates(g, q, test[f].at(t), filter);
      const double r = sort_rank(scores, test[f].at(t), cands);
      CHECK(report.ranks[n] == r);
      mrr += 1 / r;
      h1 += r <= 1;
      h3 += r <= 3;
      h10 += r <= 10;
      arity[test[f].arity()].first += 1 / r;
      arity[test[f].arity()].second += 1;
      ++n;
    }
  }
  CHECK(report.overall.mrr == doctest::Approx(mrr / n));
  CHECK(report.overall.hits1 == doctest::Approx(h1 / n));
  CHECK(report.overall.hits3 == doctest::Approx(h3 / n));
  CHECK(report.overall.hits10 == doctest::Approx(h10 / n));
  for (const auto& [k, v] : arity) {
    CHECK(report.by_arity.at(k).queries == v.second);
    CHECK(report.by_arity.at(k).mrr == doctest::Approx(v.first / v.second));
  }
  CHECK(report.overall.hits1 <= report.overall.hits3);
  CHECK(report.overall.hits3 <= report.overall.hits10);
  const auto serial = evaluate(g, test, filter, scorer, 1);
  CHECK(serial.ranks == report.ranks);
}

TEST_CASE("raising the truth's score never worsens its rank") {
  tensor::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(15);
    for (auto& s : scores) s = std::floor(tensor::uniform01(rng) * 5);
    std::vector<EntityId> all;
    for (std::uint32_t v = 0; v < 15; ++v) all.push_back({v});
    const EntityId truth{static_cast<std::uint32_t>(trial % 15)};
    const double before = rank_of(scores, truth, all);
    scores[truth.index] += 1;
    CHECK(rank_of(scores, truth, all) <= before);
  }
}

TEST_CASE("model evaluation and JSON report") {
  const auto g = support::figure1();
  model::ModelConfig cfg;
  cfg.dim = 8;
  cfg.rel_layers = 1;
  cfg.ent_layers = 1;
  const auto params = model::ModelParams<double>::init(cfg, 1);
  model::GraphContext<double> ctx(g, cfg);
  const FactSet filter(g.edges());
  const auto report = evaluate_model(ctx, g.edges(), filter, params, cfg);
  CHECK(report.overall.queries == 12);
  CHECK(report.by_relation.at("AtConference").queries == 5);
  // Each query's own fact is hidden from message passing while it is ranked.
  const auto q = query_of_fact(g.edge(1), 2);
  const auto probs = model::score_query(ctx, q, params, cfg, {1});
  const std::vector<double> scores(probs.begin(), probs.end());
  const auto cands = filtered_candidates(g, q, g.edge(1).at(2), filter);
  CHECK(report.ranks[4 + 1] == sort_rank(scores, g.edge(1).at(2), cands));

  const auto j = nlohmann::json::parse(to_json(report));
  CHECK(j["queries"] == 12);
  CHECK(j.contains("hits@10"));
  CHECK(j.contains("arity_5_mrr"));
  CHECK(j.contains("relation_Teaches_hits@1"));
  CHECK(j["mrr"].get<double>() == doctest::Approx(report.overall.mrr));
}
