#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "hyper/data/datasets.hpp"
#include "hyper/eval/evaluate.hpp"
#include "hyper/model/model.hpp"
#include "hyper/relgraph/relation_graph.hpp"
#include "hyper/tensor/memory.hpp"
#include "hyper/train/train.hpp"
#include "support.hpp"

using namespace hyper;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::size_t worker_threads() { return std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 4); }

// ----- 1 ------------------------------------------------------------------------------

Outcome relation_graph_oracle() {
  const auto t0 = Clock::now();
  tensor::Rng rng(2024);
  std::size_t mismatches = 0, edges_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto entities = 2 + static_cast<std::size_t>(tensor::uniform01(rng) * 29);
    const auto edges = 1 + static_cast<std::size_t>(tensor::uniform01(rng) * 50);
    const auto relations = 1 + static_cast<std::size_t>(tensor::uniform01(rng) * 8);
    const auto g = support::random_graph(rng(), entities, edges, relations, 6);
    for (auto mode : {relgraph::Mode::exclude_same_edge, relgraph::Mode::raw_spmm}) {
      const auto fast = relgraph::build_relation_graph(g, mode);
      const auto slow = relgraph::brute_force_relation_graph(g, mode);
      const std::set<relgraph::RelationEdge> a(fast.edges.begin(), fast.edges.end());
      const std::set<relgraph::RelationEdge> b(slow.edges.begin(), slow.edges.end());
      mismatches += a != b;
      edges_seen += a.size();
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30,
          "200 graphs x 2 modes, " + std::to_string(mismatches) + " mismatches, " + std::to_string(edges_seen) +
              " edges compared, " + fmt(secs, 3) + " s (limit 30 s)"};
}

// ----- 2 ------------------------------------------------------------------------------

Outcome running_example_relation_graph() {
  const auto g = support::figure1();
  const auto rg = relgraph::build_relation_graph(g);
  using Edge = std::tuple<std::string, std::string, int, int>;
  std::set<Edge> got;
  for (const auto& e : rg.edges) {
    got.insert({g.relation_name(e.from), g.relation_name(e.to), static_cast<int>(e.pair.a),
                static_cast<int>(e.pair.b)});
  }
  const std::set<Edge> expected = {
      {"Research", "Teaches", 1, 1},      {"Teaches", "Research", 1, 1},
      {"Research", "AtConference", 3, 2}, {"AtConference", "Research", 2, 3},
      {"Teaches", "AtConference", 3, 4},  {"AtConference", "Teaches", 4, 3},
  };
  return {got == expected && rg.edges.size() == 6,
          std::to_string(rg.edges.size()) + " directed labelled edges, exact match " + (got == expected ? "yes" : "no")};
}

// ----- 3 ------------------------------------------------------------------------------

using NamedFacts = std::set<std::vector<std::string>>;

/// Facts with edge nodes renamed e1, e2, ... by first appearance.
NamedFacts canonical(const KnowledgeHypergraph& g) {
  std::map<std::string, std::string> rename;
  NamedFacts out;
  for (const auto& e : g.edges()) {
    std::vector<std::string> f{g.relation_name(e.relation)};
    for (auto v : e.entities) {
      auto name = g.entity_name(v);
      if (data::is_edge_node(name)) {
        auto [it, fresh] = rename.try_emplace(name, "e" + std::to_string(rename.size() + 1));
        name = it->second;
      }
      f.push_back(name);
    }
    out.insert(f);
  }
  return out;
}

Outcome reification_examples() {
  const auto g = support::figure1();
  const NamedFacts positional = {
      {"Research-1", "e1", "Bengio"},       {"Research-2", "e1", "ClimateAI"},
      {"Research-3", "e1", "Montreal"},     {"Research-4", "e1", "CIFAR"},
      {"AtConference-1", "e2", "Sasha"},    {"AtConference-2", "e2", "Montreal"},
      {"AtConference-3", "e2", "2015"},     {"AtConference-4", "e2", "EthicalAI"},
      {"AtConference-5", "e2", "NeurIPS"},  {"Teaches-1", "e3", "Bengio"},
      {"Teaches-2", "e3", "Ian"},           {"Teaches-3", "e3", "EthicalAI"},
  };
  const NamedFacts relnode = {
      {"hasEntity_1", "e1", "Bengio"},          {"hasEntity_2", "e1", "ClimateAI"},
      {"hasEntity_3", "e1", "Montreal"},        {"hasEntity_4", "e1", "CIFAR"},
      {"hasRelationType", "e1", "Research"},    {"hasEntity_1", "e2", "Sasha"},
      {"hasEntity_2", "e2", "Montreal"},        {"hasEntity_3", "e2", "2015"},
      {"hasEntity_4", "e2", "EthicalAI"},       {"hasEntity_5", "e2", "NeurIPS"},
      {"hasRelationType", "e2", "AtConference"}, {"hasEntity_1", "e3", "Bengio"},
      {"hasEntity_2", "e3", "Ian"},             {"hasEntity_3", "e3", "EthicalAI"},
      {"hasRelationType", "e3", "Teaches"},
  };
  const auto rp = data::reify_positional(g);
  const auto rr = data::reify_relnode(g);
  const bool pos_ok = canonical(rp) == positional && rp.num_edges() == 12;
  const bool rel_ok = canonical(rr) == relnode && rr.num_edges() == 15;
  const auto original = support::named_facts(g);
  const bool trip_pos = support::named_facts(data::unreify_positional(rp)) == original;
  const bool trip_rel = support::named_facts(data::unreify_relnode(rr)) == original;
  return {pos_ok && rel_ok && trip_pos && trip_rel,
          "positional " + std::to_string(rp.num_edges()) + " facts " + (pos_ok ? "exact" : "DIFFER") +
              ", relation-node " + std::to_string(rr.num_edges()) + " facts " + (rel_ok ? "exact" : "DIFFER") +
              ", round trips " + (trip_pos && trip_rel ? "exact" : "BROKEN")};
}

// ----- 4 ------------------------------------------------------------------------------

Outcome pair_injectivity() {
  const auto t0 = Clock::now();
  const posenc::PosEncConfig cfg{64};
  std::vector<std::vector<double>> rows;
  for (std::size_t a = 1; a <= 64; ++a) {
    for (std::size_t b = 1; b <= 64; ++b) rows.push_back(posenc::pair_input(a, b, cfg));
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      double gap = 0;
      for (std::size_t c = 0; c < rows[i].size(); ++c) gap = std::max(gap, std::abs(rows[i][c] - rows[j][c]));
      min_gap = std::min(min_gap, gap);
    }
  }
  const double secs = seconds_since(t0);
  return {min_gap > 1e-9 && secs < 10,
          "4096 pairs, min L-inf gap " + fmt(min_gap) + " (need > 1e-9), " + fmt(secs, 3) + " s (limit 10 s)"};
}

// ----- 5 ------------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const auto g = support::random_graph(77, 12, 10, 4, 4, 2);
  model::ModelConfig cfg;
  cfg.dim = 8;
  cfg.rel_layers = 2;
  cfg.ent_layers = 2;
  model::GraphContext<double> ctx(g, cfg);
  auto params = model::ModelParams<double>::init(cfg, 5);
  // Freshly initialised biases are exactly zero, which parks isolated rows on
  // ReLU kinks where the derivative is undefined; evaluate at a generic point.
  tensor::Rng rng(19);
  for (auto& t : params.tensors()) {
    for (auto& v : t.values()) v += 0.2 * (tensor::uniform01(rng) - 0.5);
  }
  const auto q = query_of_fact(g.edge(3), 2);
  std::vector<std::uint32_t> rows(g.num_entities());
  for (std::uint32_t v = 0; v < rows.size(); ++v) rows[v] = v;
  std::vector<double> w(rows.size());
  for (auto& x : w) x = tensor::uniform01(rng) - 0.5;
  auto loss = [&] {
    auto rel = model::rel_forward(ctx, q.relation, params, cfg);
    auto ent = model::encode_entities(ctx, q, rel, params);
    auto probs = tensor::sigmoid(model::decode_rows(ent, rows, params));
    return tensor::sum(tensor::mul(probs, tensor::Tensor<double>::from({rows.size()}, w)));
  };
  const double err = support::gradient_error(loss, params.tensors(), 1e-5, 1e-8);
  const double secs = seconds_since(t0);
  return {err < 1e-4 && secs < 60,
          std::to_string(params.parameter_count()) + " parameters, max relative error " + fmt(err) +
              " (need < 1e-4), " + fmt(secs, 3) + " s (limit 60 s)"};
}

// ----- 6 ------------------------------------------------------------------------------

Outcome isomorphism_invariance() {
  const auto t0 = Clock::now();
  const model::ModelConfig cfg;
  double worst = 0;
  std::size_t queries = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = support::random_graph(500 + s, 30, 50, 6, 5, 2);
    tensor::Rng rng(s);
    const auto rl = data::relabel(g, rng, "perm");
    const auto params = model::ModelParams<float>::init(cfg, s);
    model::GraphContext<float> c1(g, cfg), c2(rl.graph, cfg);
    for (int k = 0; k < 5; ++k) {
      const auto& edge = g.edge(static_cast<std::size_t>(tensor::uniform01(rng) * g.num_edges()));
      const auto q = query_of_fact(edge, 1 + static_cast<std::size_t>(tensor::uniform01(rng) * edge.arity()));
      const auto a = model::score_query(c1, q, params, cfg);
      const auto b = model::score_query(c2, rl.apply(q), params, cfg);
      for (std::size_t v = 0; v < a.size(); ++v) {
        worst = std::max(worst, static_cast<double>(std::abs(a[v] - b[rl.entity_map[v]])));
      }
      ++queries;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 120,
          std::to_string(queries) + " queries at 32-bit, max score difference " + fmt(worst) + " (need <= 1e-5), " +
              fmt(secs, 3) + " s (limit 120 s)"};
}

// ----- 7, 8, 9, 13: the synthetic corpus ---------------------------------------------------

/// One training run on the synthetic corpus with a fixed 70/10/20 split.
struct CorpusRun {
  KnowledgeHypergraph corpus;
  data::FactSplit split;
  KnowledgeHypergraph train_graph;
  model::ModelConfig model_cfg;
  model::ModelParams<float> params;
  eval::Report test;
  double best_val = 0;
  std::size_t epochs_run = 0;
  double seconds = 0;
};

train::TrainConfig corpus_training() {
  train::TrainConfig tc;
  tc.negatives = 256;
  tc.batch_size = 8;
  tc.lr = 5e-4;
  tc.epochs = 200;
  tc.patience = 25;
  tc.seed = 0;
  tc.threads = worker_threads();
  return tc;
}

const data::FactSplit& corpus_split() {
  static const data::FactSplit split = [] {
    tensor::Rng rng(1);
    return data::split_facts(data::synthetic_corpus(), 0.1, 0.2, rng);
  }();
  return split;
}

/// Same split membership applied to a corpus whose facts were edited in place.
data::FactSplit remap_split(const KnowledgeHypergraph& clean, const KnowledgeHypergraph& edited) {
  data::FactSplit out;
  const auto& s = corpus_split();
  auto map = [&](const std::vector<Hyperedge>& in, std::vector<Hyperedge>& dst) {
    for (const auto& e : in) dst.push_back(edited.edge(*clean.find_edge(e)));
  };
  map(s.train, out.train);
  map(s.valid, out.valid);
  map(s.test, out.test);
  return out;
}

CorpusRun run_corpus(KnowledgeHypergraph corpus, data::FactSplit split, model::ModelConfig mc, const char* label) {
  const auto t0 = Clock::now();
  CorpusRun run{std::move(corpus), std::move(split), {}, mc, {}, {}, 0, 0, 0};
  run.train_graph = data::with_vocabulary(run.corpus, run.split.train);
  model::GraphContext<float> ctx(run.train_graph, mc);
  const FactSet filter(run.corpus.edges());
  train::Validation<float> val{&ctx, run.split.valid, filter};
  const auto tc = corpus_training();
  auto result = train::train(ctx, val, model::ModelParams<float>::init(mc, 7), mc, tc);
  run.params = std::move(result.best);
  run.best_val = result.best_val_mrr;
  run.epochs_run = result.log.empty() ? 0 : result.log.size() - 1;
  run.test = eval::evaluate_model(ctx, run.split.test, filter, run.params, mc, tc.threads);
  run.seconds = seconds_since(t0);
  std::cout << "  run " << label << ": " << run.epochs_run << " epochs, best valid MRR " << fmt(run.best_val)
            << ", test MRR " << fmt(run.test.overall.mrr) << ", " << fmt(run.seconds, 4) << " s" << std::endl;
  return run;
}

const CorpusRun& clean_run() {
  static const CorpusRun run = [] {
    const auto corpus = data::synthetic_corpus();
    return run_corpus(corpus, corpus_split(), model::ModelConfig{}, "sinusoidal");
  }();
  return run;
}

Outcome desk_scale_learning() {
  const auto& run = clean_run();
  const double mrr = run.test.overall.mrr;
  return {mrr >= 0.8 && run.epochs_run <= 200 && run.seconds < 900,
          "held-out MRR " + fmt(mrr) + " (need >= 0.8), hits@1 " + fmt(run.test.overall.hits1) + ", " +
              std::to_string(run.test.overall.queries) + " queries, " + std::to_string(run.epochs_run) +
              " epochs, " + fmt(run.seconds, 4) + " s on " + std::to_string(worker_threads()) +
              " thread(s) (limit 900 s)"};
}

Outcome relabel_transfer() {
  const auto& run = clean_run();
  tensor::Rng rng(99);
  const auto rl = data::relabel(run.train_graph, rng, "fresh");
  std::vector<Hyperedge> test, all;
  for (const auto& e : run.split.test) test.push_back(rl.apply(e));
  for (const auto& e : run.corpus.edges()) all.push_back(rl.apply(e));
  model::GraphContext<float> ctx(rl.graph, run.model_cfg);
  const auto report = eval::evaluate_model(ctx, test, FactSet(all), run.params, run.model_cfg, worker_threads());
  const double diff = std::abs(report.overall.mrr - run.test.overall.mrr);
  const bool fresh = rl.graph.entity_name(EntityId{0}).starts_with("fresh");
  return {diff <= 1e-5 && fresh,
          "relabelled MRR " + fmt(report.overall.mrr, 8) + " vs " + fmt(run.test.overall.mrr, 8) + ", difference " +
              fmt(diff) + " (need <= 1e-5)"};
}

Outcome corruption_ablation() {
  const auto& clean = clean_run();
  const auto project = clean.corpus.relation("project");
  tensor::Rng rng(5);
  const auto corrupted = data::corrupt_positions(clean.corpus, project, 0.5, rng);
  const auto run = run_corpus(corrupted, remap_split(clean.corpus, corrupted), clean.model_cfg, "corrupted");
  const double before = clean.test.by_relation.at("project").mrr;
  const double after = run.test.by_relation.at("project").mrr;
  return {before - after >= 0.1, "project test MRR " + fmt(before) + " clean vs " + fmt(after) +
                                     " with half its facts permuted, drop " + fmt(before - after) + " (need >= 0.1)"};
}

Outcome positional_ablation() {
  const auto& clean = clean_run();
  std::map<std::string, double> mrr{{"sinusoidal", clean.test.overall.mrr}};
  for (auto kind : {posenc::Kind::all_one, posenc::Kind::random, posenc::Kind::magnitude}) {
    auto mc = clean.model_cfg;
    mc.pos_kind = kind;
    const auto run = run_corpus(clean.corpus, clean.split, mc, std::string(posenc::to_string(kind)).c_str());
    mrr[std::string(posenc::to_string(kind))] = run.test.overall.mrr;
  }
  bool best = true;
  std::string detail;
  for (const auto& [name, v] : mrr) {
    if (name != "sinusoidal" && v >= mrr["sinusoidal"]) best = false;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt(v);
  }
  return {best, "held-out MRR: " + detail + (best ? "; sinusoidal highest" : "; sinusoidal NOT highest")};
}

// ----- 10 -----------------------------------------------------------------------------

Outcome evaluator_correctness() {
  // Ten facts over disjoint entities: no query has another true answer, so
  // every query keeps all |V| candidates.
  GraphBuilder b;
  for (int i = 0; i < 10; ++i) {
    const std::vector<std::string> args{"a" + std::to_string(i), "b" + std::to_string(i), "c" + std::to_string(i)};
    b.add_fact("r", args);
  }
  const auto g = std::move(b).build();
  const FactSet filter(g.edges());
  const std::size_t m = g.num_entities();
  const auto constant = eval::evaluate(g, g.edges(), filter, [&](const Query&, std::size_t) {
    return std::vector<double>(m, 1.0);
  });
  const double analytic = 2.0 / static_cast<double>(m + 1);
  const bool constant_ok = std::abs(constant.overall.mrr - analytic) <= 1e-12 && constant.overall.queries == 30;

  // Brute force with coarse random scores (many ties) on a graph with overlapping facts.
  const auto h = support::random_graph(31, 8, 10, 2, 3, 2);
  const FactSet hf(h.edges());
  auto scorer = [&](const Query& q, std::size_t fact) {
    tensor::Rng rng(fact * 7 + q.masked_position);
    std::vector<double> s(h.num_entities());
    for (auto& v : s) v = std::floor(tensor::uniform01(rng) * 4);
    return s;
  };
  const auto report = eval::evaluate(h, h.edges(), hf, scorer);
  double mrr = 0, h1 = 0, h3 = 0, h10 = 0;
  std::size_t n = 0;
  bool ranks_ok = true;
  for (std::size_t f = 0; f < h.num_edges(); ++f) {
    const auto& e = h.edge(f);
    for (std::size_t t = 1; t <= e.arity(); ++t) {
      const auto q = query_of_fact(e, t);
      const auto s = scorer(q, f);
      const double truth = s[e.at(t).index];
      double greater = 0, ties = 0;
      for (std::uint32_t v = 0; v < h.num_entities(); ++v) {
        if (EntityId{v} == e.at(t)) continue;
        auto cand = e;
        cand.entities[t - 1] = EntityId{v};
        bool known = false;
        for (const auto& other : h.edges()) known = known || other == cand;
        if (known) continue;
        if (s[v] > truth) ++greater;
        if (s[v] == truth) ++ties;
      }
      const double rank = 1 + greater + ties / 2;
      ranks_ok = ranks_ok && report.ranks[n] == rank;
      mrr += 1 / rank;
      h1 += rank <= 1;
      h3 += rank <= 3;
      h10 += rank <= 10;
      ++n;
    }
  }
  const double dn = static_cast<double>(n);
  const bool brute_ok = ranks_ok && report.overall.mrr == mrr / dn && report.overall.hits1 == h1 / dn &&
                        report.overall.hits3 == h3 / dn && report.overall.hits10 == h10 / dn;
  return {constant_ok && brute_ok,
          "constant scorer MRR " + fmt(constant.overall.mrr, 10) + " vs 2/(m+1) = " + fmt(analytic, 10) +
              "; brute force over " + std::to_string(n) + " queries " + (brute_ok ? "identical" : "DIFFERS")};
}

// ----- 11 -----------------------------------------------------------------------------

bool single_component(const KnowledgeHypergraph& g) {
  const auto label = connected_components(g);
  std::set<std::size_t> seen;
  for (const auto& e : g.edges()) {
    for (auto v : e.entities) seen.insert(label[v.index]);
  }
  return seen.size() == 1;
}

Outcome split_invariants() {
  data::RandomGraphParams rp;
  rp.entities = 1000;
  rp.facts = 2000;
  const auto source = data::random_hypergraph(rp);
  std::size_t overlaps = 0, disconnected = 0, failures = 0, runs = 0;
  double worst = 0;
  for (double p_tri : {0.25, 0.5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ++runs;
      try {
        const auto s = data::generate_split(source, {100, 100, p_tri == 0.25 ? 0.4 : 0.5, p_tri, seed});
        std::set<std::string> train_names;
        for (const auto& e : s.train.edges()) {
          for (auto v : e.entities) train_names.insert(s.train.entity_name(v));
        }
        for (const auto& e : s.inference.edges()) {
          for (auto v : e.entities) overlaps += train_names.contains(s.inference.entity_name(v));
        }
        disconnected += !single_component(s.train) + !single_component(s.inference);
        worst = std::max(worst, std::abs(s.unseen_fraction - p_tri));
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  return {overlaps == 0 && disconnected == 0 && failures == 0 && worst <= 0.10,
          std::to_string(runs) + " splits (p_tri 0.25 and 0.5), " + std::to_string(overlaps) +
              " shared entities, " + std::to_string(disconnected) + " disconnected graphs, " +
              std::to_string(failures) + " failures, worst unseen-fraction error " + fmt(worst) + " (need <= 0.10)"};
}

// ----- 12 -----------------------------------------------------------------------------

Outcome aggregation_memory() {
  const std::size_t n_entities = 2000, n_edges = 20000, k = 5;
  GraphBuilder b;
  b.add_relation("wide", k);
  b.add_relation("other", k);
  tensor::Rng rng(12);
  std::size_t added = 0;
  while (added < n_edges) {
    std::vector<std::string> args;
    for (std::size_t i = 0; i < k; ++i) args.push_back("v" + std::to_string(rng() % n_entities));
    added += b.add_fact(added % 2 ? "wide" : "other", args);
  }
  const auto g = std::move(b).build();
  model::ModelConfig cfg;
  cfg.dim = 32;
  cfg.rel_layers = 2;
  cfg.ent_layers = 2;
  const std::size_t d = cfg.dim;
  model::GraphContext<float> ctx(g, cfg);
  auto params = model::ModelParams<float>::init(cfg, 1);
  const auto q = query_of_fact(g.edge(0), 1);
  std::vector<std::uint32_t> rows(g.num_entities());
  for (std::uint32_t v = 0; v < rows.size(); ++v) rows[v] = v;

  tensor::memory::reset_peaks();
  {
    tensor::Tape<float> tape;
    tensor::TapeScope<float> scope(tape);
    auto rel = model::rel_forward(ctx, q.relation, params, cfg);
    auto ent = model::encode_entities(ctx, q, rel, params);
    tape.backward(tensor::sum(model::decode_rows(ent, rows, params)));
  }
  const auto stats = tensor::memory::stats();
  const std::size_t bound = 4 * (g.num_entities() + g.num_edges()) * d;
  const std::size_t materialised = k * g.num_edges() * d;
  return {stats.largest_buffer <= bound,
          "|V| " + std::to_string(g.num_entities()) + ", |E| " + std::to_string(g.num_edges()) + ", d " +
              std::to_string(d) + ": largest buffer " + std::to_string(stats.largest_buffer) + " elements, bound " +
              std::to_string(bound) + ", per-message materialisation would need " + std::to_string(materialised)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "relation graph matches brute force", relation_graph_oracle},
      {2, "running example relation graph", running_example_relation_graph},
      {3, "running example reifications", reification_examples},
      {4, "position pair encodings are injective", pair_injectivity},
      {5, "analytic gradients match finite differences", gradient_fidelity},
      {6, "scores invariant under relabelling", isomorphism_invariance},
      {7, "desk-scale learning", desk_scale_learning},
      {8, "zero-shot transfer to a relabelled copy", relabel_transfer},
      {9, "position corruption lowers MRR", corruption_ablation},
      {10, "evaluator correctness", evaluator_correctness},
      {11, "split generator invariants", split_invariants},
      {12, "aggregation memory bound", aggregation_memory},
      {13, "positional encoding ablation", positional_ablation},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
