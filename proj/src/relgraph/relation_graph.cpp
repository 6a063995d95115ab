#include "hyper/relgraph/relation_graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace hyper::relgraph {

Mode parse_mode(std::string_view text) {
  if (text == "exclude-same-edge") return Mode::exclude_same_edge;
  if (text == "raw-spmm") return Mode::raw_spmm;
  throw Error("unknown relation-graph mode '" + std::string(text) +
              "' (expected exclude-same-edge or raw-spmm)");
}

std::string_view to_string(Mode mode) {
  return mode == Mode::exclude_same_edge ? "exclude-same-edge" : "raw-spmm";
}

SparsePositionMatrix position_matrix(const KnowledgeHypergraph& graph, std::size_t position) {
  SparsePositionMatrix m;
  m.rows = graph.num_entities();
  m.cols = graph.num_relations();
  if (position < 1) return m;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> counts;
  for (const auto& e : graph.edges()) {
    if (e.arity() < position) continue;
    ++counts[{e.entities[position - 1].index, e.relation.index}];
  }
  m.entries.reserve(counts.size());
  for (const auto& [key, c] : counts) m.entries.push_back({key.first, key.second, c});
  return m;
}

namespace {

using PairCounts = std::unordered_map<std::uint64_t, std::int64_t>;

std::uint64_t pack(std::uint32_t r1, std::uint32_t r2) { return (std::uint64_t{r1} << 32) | r2; }

// C = A^T B for two |V| x |R| matrices sharing the row space; both COO inputs
// are row-sorted, so matching rows are found by a merge.
PairCounts spmm_transpose_a(const SparsePositionMatrix& a, const SparsePositionMatrix& b) {
  PairCounts acc;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    const auto ra = a.entries[i].row;
    const auto rb = b.entries[j].row;
    if (ra < rb) {
      ++i;
    } else if (rb < ra) {
      ++j;
    } else {
      std::size_t i_end = i;
      while (i_end < a.entries.size() && a.entries[i_end].row == ra) ++i_end;
      std::size_t j_end = j;
      while (j_end < b.entries.size() && b.entries[j_end].row == rb) ++j_end;
      for (std::size_t x = i; x < i_end; ++x) {
        for (std::size_t y = j; y < j_end; ++y) {
          acc[pack(a.entries[x].col, b.entries[y].col)] += a.entries[x].count * b.entries[y].count;
        }
      }
      i = i_end;
      j = j_end;
    }
  }
  return acc;
}

void finalize(RelationGraph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

}  // namespace

RelationGraph build_relation_graph(const KnowledgeHypergraph& graph, Mode mode) {
  if (graph.empty()) throw EmptyGraph("relation graph of an empty hypergraph");
  RelationGraph out;
  out.num_relations = graph.num_relations();
  out.k_max = graph.max_arity();
  const std::size_t k = out.k_max;

  std::vector<SparsePositionMatrix> by_position;
  by_position.reserve(k);
  for (std::size_t a = 1; a <= k; ++a) by_position.push_back(position_matrix(graph, a));

  for (std::size_t a = 1; a <= k; ++a) {
    for (std::size_t b = 1; b <= k; ++b) {
      PairCounts counts = spmm_transpose_a(by_position[a - 1], by_position[b - 1]);
      if (mode == Mode::exclude_same_edge) {
        // Each edge with e(a) == e(b) contributed exactly one (e, e) pair.
        for (const auto& e : graph.edges()) {
          if (e.arity() < std::max(a, b)) continue;
          if (e.entities[a - 1] == e.entities[b - 1]) {
            counts[pack(e.relation.index, e.relation.index)] -= 1;
          }
        }
      }
      for (const auto& [key, c] : counts) {
        if (c <= 0) continue;
        out.edges.push_back({RelationId{static_cast<std::uint32_t>(key >> 32)},
                             RelationId{static_cast<std::uint32_t>(key & 0xffffffffu)},
                             PositionPair{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)}});
      }
    }
  }
  finalize(out);
  return out;
}

RelationGraph brute_force_relation_graph(const KnowledgeHypergraph& graph, Mode mode) {
  RelationGraph out;
  out.num_relations = graph.num_relations();
  out.k_max = graph.max_arity();
  const auto& edges = graph.edges();
  for (std::size_t x = 0; x < edges.size(); ++x) {
    for (std::size_t y = 0; y < edges.size(); ++y) {
      if (x == y && mode == Mode::exclude_same_edge) continue;
      const auto& e1 = edges[x];
      const auto& e2 = edges[y];
      for (std::size_t a = 1; a <= e1.arity(); ++a) {
        for (std::size_t b = 1; b <= e2.arity(); ++b) {
          if (e1.entities[a - 1] == e2.entities[b - 1]) {
            out.edges.push_back({e1.relation, e2.relation,
                                 PositionPair{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)}});
          }
        }
      }
    }
  }
  finalize(out);
  return out;
}

std::string to_tsv(const KnowledgeHypergraph& graph, const RelationGraph& rel_graph) {
  std::ostringstream os;
  for (const auto& e : rel_graph.edges) {
    os << graph.relation_name(e.from) << '\t' << graph.relation_name(e.to) << '\t' << e.pair.a << '\t'
       << e.pair.b << '\n';
  }
  return os.str();
}

std::vector<PositionPair> distinct_pairs(const RelationGraph& rel_graph) {
  std::set<PositionPair> pairs;
  for (const auto& e : rel_graph.edges) pairs.insert(e.pair);
  return {pairs.begin(), pairs.end()};
}

}  // namespace hyper::relgraph
