#include <fstream>
#include <map>

#include "doctest.h"
#include "hyper/train/train.hpp"
#include "support.hpp"

using namespace hyper;
using namespace hyper::train;
using T64 = tensor::Tensor<double>;

namespace {

model::ModelConfig tiny_model() {
  model::ModelConfig cfg;
  cfg.dim = 8;
  cfg.rel_layers = 1;
  cfg.ent_layers = 2;
  return cfg;
}

TrainConfig tiny_training() {
  TrainConfig cfg;
  cfg.negatives = 8;
  cfg.batch_size = 4;
  cfg.lr = 5e-3;
  cfg.epochs = 3;
  cfg.batches_per_epoch = 5;
  cfg.seed = 3;
  return cfg;
}

std::vector<double> flat(const model::ModelParams<double>& p) {
  std::vector<double> out;
  for (const auto& t : p.tensors()) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

double chi_square(const std::vector<std::size_t>& counts, const std::vector<double>& expected) {
  double x = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    x += (counts[i] - expected[i]) * (counts[i] - expected[i]) / expected[i];
  }
  return x;
}

}  // namespace

TEST_CASE("training queries pick a fact, then a position, uniformly") {
  const auto g = support::figure1();  // arities 4, 5, 3
  Rng rng(1);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  const std::size_t n = 120000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sample_training_query(g, rng);
    CHECK(complete_query(s.query, s.truth) == g.edge(s.edge));
    ++counts[{s.edge, s.query.masked_position}];
  }
  std::vector<std::size_t> observed;
  std::vector<double> expected;
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t t = 1; t <= g.edge(e).arity(); ++t) {
      observed.push_back(counts[{e, t}]);
      expected.push_back(n / 3.0 / g.edge(e).arity());
    }
  }
  // 12 cells, 11 degrees of freedom; 31.26 is the 0.999 quantile.
  CHECK(chi_square(observed, expected) < 31.26);
  CHECK_THROWS_AS(sample_training_query(KnowledgeHypergraph{}, rng), EmptyGraph);
}

TEST_CASE("strict negatives never complete a known fact") {
  const auto g = parse_facts("r\ta\tb\nr\ta\tc\nr\ta\td\nr\tx\ty\n");
  const FactSet known(g.edges());
  const Query q{g.relation("r"), {{g.entity("a"), 1}}, 2};
  Rng rng(2);
  const auto negs = sample_negatives(g, q, g.entity("b"), 500, true, known, rng);
  CHECK(negs.size() == 500);
  std::set<std::string> seen;
  for (auto v : negs) seen.insert(g.entity_name(v));
  CHECK(seen == std::set<std::string>{"a", "x", "y"});
  const auto loose = sample_negatives(g, q, g.entity("b"), 500, false, known, rng);
  std::set<std::string> loose_seen;
  for (auto v : loose) loose_seen.insert(g.entity_name(v));
  CHECK(loose_seen == std::set<std::string>{"a", "c", "d", "x", "y"});

  const auto full = parse_facts("r\ta\tb\nr\ta\tc\nr\ta\ta\n");
  const FactSet all(full.edges());
  const Query fq{full.relation("r"), {{full.entity("a"), 1}}, 2};
  CHECK_THROWS_AS(sample_negatives(full, fq, full.entity("b"), 4, true, all, rng), ExhaustedPool);
  CHECK_THROWS_AS(sample_negatives(full, fq, full.entity("b"), 0, false, all, rng), Error);
}

TEST_CASE("self-adversarial loss identities") {
  SUBCASE("one negative reduces to binary cross-entropy") {
    const auto loss = nssa_loss(T64::scalar(0.8), T64::from({1}, {0.3}), 1.0).item();
    CHECK(loss == doctest::Approx(-std::log(0.8) - std::log(0.7)));
  }
  SUBCASE("a very high temperature gives uniform weights") {
    const std::vector<double> p{0.1, 0.5, 0.9, 0.3};
    double mean = 0;
    for (double v : p) mean += std::log(1 - v) / 4;
    const auto loss = nssa_loss(T64::scalar(0.6), T64::from({4}, p), 1e6).item();
    CHECK(loss == doctest::Approx(-std::log(0.6) - mean).epsilon(1e-6));
  }
  SUBCASE("weights follow the softmax of log(1 - p) over tau") {
    const std::vector<double> p{0.2, 0.7};
    const double tau = 0.5;
    const double a = std::log(0.8) / tau, b = std::log(0.3) / tau;
    const double wa = std::exp(a) / (std::exp(a) + std::exp(b));
    const auto loss = nssa_loss(T64::scalar(0.9), T64::from({2}, p), tau).item();
    CHECK(loss == doctest::Approx(-std::log(0.9) - wa * std::log(0.8) - (1 - wa) * std::log(0.3)));
  }
  SUBCASE("permutation invariance") {
    const auto l1 = nssa_loss(T64::scalar(0.4), T64::from({3}, {0.1, 0.6, 0.3}), 0.7).item();
    const auto l2 = nssa_loss(T64::scalar(0.4), T64::from({3}, {0.6, 0.3, 0.1}), 0.7).item();
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
  }
  SUBCASE("saturated probabilities stay finite") {
    const auto loss = nssa_loss(T64::scalar(0.0), T64::from({2}, {1.0, 1.0}), 1.0).item();
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-2 * std::log(1e-7)).epsilon(1e-6));
  }
  SUBCASE("weights are constants for the gradient") {
    auto pn = T64::parameter({2}, {0.2, 0.7});
    tensor::Tape<double> tape;
    tensor::TapeScope<double> scope(tape);
    tape.backward(nssa_loss(T64::scalar(0.9), pn, 1.0));
    const double a = std::log(0.8), b = std::log(0.3);
    const double wa = std::exp(a) / (std::exp(a) + std::exp(b));
    CHECK(pn.grad()[0] == doctest::Approx(wa / 0.8));
    CHECK(pn.grad()[1] == doctest::Approx((1 - wa) / 0.3));
  }
}

TEST_CASE("sample loss masks the sample's own fact") {
  const auto g = support::figure1();
  const auto mcfg = tiny_model();
  model::GraphContext<double> ctx(g, mcfg);
  const auto params = model::ModelParams<double>::init(mcfg, 1);
  TrainingSample s{query_of_fact(g.edge(0), 2), g.edge(0).at(2), 0};
  const std::vector<EntityId> negs{g.entity("Ian"), g.entity("Sasha")};
  const double loss = sample_loss(ctx, s, negs, params, mcfg, 1.0).item();
  const auto probs = model::score_query(ctx, s.query, params, mcfg, {0});
  const auto expected = nssa_loss(T64::scalar(probs[s.truth.index]),
                                  T64::from({2}, {probs[negs[0].index], probs[negs[1].index]}), 1.0)
                            .item();
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto g = support::random_graph(5, 30, 60, 4, 3, 2);
  const auto mcfg = tiny_model();
  model::GraphContext<double> ctx(g, mcfg);
  auto cfg = tiny_training();
  cfg.epochs = 12;
  const auto init = model::ModelParams<double>::init(mcfg, 2);
  const auto a = train<double>(ctx, {}, init.clone(), mcfg, cfg);
  const auto b = train<double>(ctx, {}, init.clone(), mcfg, cfg);
  CHECK(flat(a.best) == flat(b.best));
  REQUIRE(a.log.size() == 12);
  CHECK(a.steps_run == 60);
  CHECK(a.log.back().loss < a.log.front().loss);
}

TEST_CASE("worker threads give the same update up to summation order") {
  const auto g = support::random_graph(6, 25, 50, 3, 3, 2);
  const auto mcfg = tiny_model();
  model::GraphContext<double> ctx(g, mcfg);
  auto cfg = tiny_training();
  cfg.epochs = 1;
  const auto init = model::ModelParams<double>::init(mcfg, 4);
  const auto one = train<double>(ctx, {}, init.clone(), mcfg, cfg);
  cfg.threads = 3;
  const auto three = train<double>(ctx, {}, init.clone(), mcfg, cfg);
  const auto fa = flat(one.best), fb = flat(three.best);
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-9));
  CHECK(flat(train<double>(ctx, {}, init.clone(), mcfg, cfg).best) == fb);
}

TEST_CASE("zero learning rate and zero decay leave parameters unchanged") {
  const auto g = support::figure1();
  const auto mcfg = tiny_model();
  model::GraphContext<double> ctx(g, mcfg);
  auto cfg = tiny_training();
  cfg.lr = 0;
  const auto init = model::ModelParams<double>::init(mcfg, 6);
  CHECK(flat(train<double>(ctx, {}, init.clone(), mcfg, cfg).best) == flat(init));
}

TEST_CASE("validation selects the best epoch and honours stopping rules") {
  const auto g = support::random_graph(8, 25, 70, 3, 3, 2);
  Rng rng(1);
  const auto ho = hold_out(g, 0.15, rng);
  CHECK(ho.graph.num_edges() + ho.held_out.size() == g.num_edges());
  CHECK(ho.graph.num_entities() == g.num_entities());
  const auto mcfg = tiny_model();
  model::GraphContext<double> ctx(ho.graph, mcfg);
  Validation<double> val{&ctx, ho.held_out, FactSet(g.edges())};
  auto cfg = tiny_training();
  cfg.epochs = 4;
  support::TempDir dir("train");
  TrainLog log(dir.file("log.tsv"));
  const auto init = model::ModelParams<double>::init(mcfg, 1);
  const auto res = train<double>(ctx, val, init.clone(), mcfg, cfg, &log);
  REQUIRE(res.log.size() == 5);
  double best = -1;
  for (const auto& row : res.log) best = std::max(best, row.val_mrr);
  CHECK(res.best_val_mrr == best);
  CHECK(validation_mrr(val, res.best, mcfg, cfg) == doctest::Approx(best));
  const auto text = read_text_file(dir.file("log.tsv"));
  CHECK(text.rfind("step\tloss\tval_mrr\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  auto stop = cfg;
  stop.target_val_mrr = 0.0;
  const auto early = train<double>(ctx, val, init.clone(), mcfg, stop);
  CHECK(early.steps_run == 0);
  CHECK(flat(early.best) == flat(init));

  auto patient = cfg;
  patient.epochs = 50;
  patient.lr = 0;
  patient.weight_decay = 0;
  patient.patience = 2;
  const auto flatline = train<double>(ctx, val, init.clone(), mcfg, patient);
  CHECK(flatline.steps_run == 2 * patient.batches_per_epoch);
}

TEST_CASE("pretraining mix draws graphs by size") {
  const auto big = support::random_graph(1, 40, 90, 3, 3);
  const auto small = support::random_graph(2, 10, 10, 2, 2);
  PretrainMix mix{{{&big, "big"}, {&small, "small"}}};
  const auto w = mix.weights();
  CHECK(w[0] == doctest::Approx(big.num_edges() / double(big.num_edges() + small.num_edges())));
  Rng rng(3);
  std::vector<std::size_t> counts(2, 0);
  const std::size_t n = 50000;
  for (std::size_t i = 0; i < n; ++i) ++counts[mix.draw(rng)];
  // One degree of freedom; 10.83 is the 0.999 quantile.
  CHECK(chi_square(counts, {n * w[0], n * w[1]}) < 10.83);
}

TEST_CASE("pretraining, checkpointing and fine-tuning") {
  const auto a = support::random_graph(11, 30, 80, 3, 3, 2);
  const auto b = support::random_graph(12, 20, 40, 3, 4, 2);
  const auto mcfg = tiny_model();
  auto cfg = tiny_training();
  cfg.steps = 6;
  cfg.val_every = 3;
  PretrainMix mix{{{&a, "a"}, {&b, "b"}}};
  const auto r1 = pretrain<double>(mix, mcfg, cfg);
  const auto r2 = pretrain<double>(mix, mcfg, cfg);
  CHECK(flat(r1.best) == flat(r2.best));
  CHECK(r1.steps_run == 6);
  CHECK(r1.best_val_mrr > 0);

  const auto ck = model::to_checkpoint(mcfg, r1.best);
  const auto target = support::random_graph(13, 15, 30, 2, 3, 2);
  model::GraphContext<double> ctx(target, mcfg);
  auto zero = cfg;
  zero.epochs = 0;
  CHECK(flat(finetune<double>(ck, ctx, {}, mcfg, zero).best) == flat(r1.best));
  const auto tuned = finetune<double>(ck, ctx, {}, mcfg, cfg);
  CHECK(flat(tuned.best) != flat(r1.best));
  auto other = mcfg;
  other.dim = 16;
  CHECK_THROWS_AS(finetune<double>(ck, ctx, {}, other, cfg), ConfigMismatch);
}

TEST_CASE("configuration validation") {
  auto cfg = tiny_training();
  cfg.negatives = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = tiny_training();
  cfg.adv_temperature = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
