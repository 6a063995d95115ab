#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hyper/core/hypergraph.hpp"
#include "hyper/tensor/init.hpp"
#include "hyper/tensor/tensor.hpp"

namespace support {

/// The running example: three facts of arity 4, 5 and 3.
inline const char* kFigure1 =
    "Research\tBengio\tClimateAI\tMontreal\tCIFAR\n"
    "AtConference\tSasha\tMontreal\t2015\tEthicalAI\tNeurIPS\n"
    "Teaches\tBengio\tIan\tEthicalAI\n";

inline hyper::KnowledgeHypergraph figure1() { return hyper::parse_facts(kFigure1); }

/// Small random hypergraph with arities in [1, max_arity]. Entity names are
/// drawn from a pool of `entities`; relation r has arity 1 + (r % max_arity).
inline hyper::KnowledgeHypergraph random_graph(std::uint64_t seed, std::size_t entities, std::size_t edges,
                                               std::size_t relations, std::size_t max_arity,
                                               std::size_t min_arity = 1) {
  hyper::tensor::Rng rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(hyper::tensor::uniform01(rng) * n); };
  hyper::GraphBuilder b;
  const std::size_t span = max_arity - min_arity + 1;
  for (std::size_t i = 0; i < edges; ++i) {
    const std::size_t r = pick(relations);
    const std::size_t k = min_arity + r % span;
    std::vector<std::string> args;
    for (std::size_t j = 0; j < k; ++j) args.push_back("v" + std::to_string(pick(entities)));
    b.add_fact("r" + std::to_string(r), args);
  }
  return std::move(b).build();
}

/// Facts as name tuples, for vocabulary-independent comparison.
inline std::set<std::vector<std::string>> named_facts(const hyper::KnowledgeHypergraph& g) {
  std::set<std::vector<std::string>> out;
  for (const auto& e : g.edges()) {
    std::vector<std::string> f{g.relation_name(e.relation)};
    for (auto v : e.entities) f.push_back(g.entity_name(v));
    out.insert(f);
  }
  return out;
}

/// Max relative error |n - a| / max(|n|, |a|, floor) between analytic (a) and
/// central-difference (n) gradients of `loss` over every element of `params`.
inline double gradient_error(const std::function<hyper::tensor::Tensor<double>()>& loss,
                             std::vector<hyper::tensor::Tensor<double>> params, double h = 1e-5,
                             double floor = 1e-6) {
  using namespace hyper::tensor;
  for (auto& p : params) p.zero_grad();
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    tape.backward(loss());
  }
  double worst = 0;
  for (auto& p : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = loss().item();
      p.data()[i] = saved - h;
      const double down = loss().item();
      p.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double err =
          std::abs(numeric - analytic[i]) / std::max({floor, std::abs(numeric), std::abs(analytic[i])});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("hyper_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace support
