#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hyper/core/hypergraph.hpp"

namespace hyper::relgraph {

/// Ordered pair of 1-based argument positions (a, b).
struct PositionPair {
  std::uint32_t a = 1;
  std::uint32_t b = 1;
  auto operator<=>(const PositionPair&) const = default;
};

/// Directed typed edge of the relation graph: some entity sits at position
/// `pair.a` of a `from` fact and at position `pair.b` of a `to` fact.
struct RelationEdge {
  RelationId from;
  RelationId to;
  PositionPair pair;
  auto operator<=>(const RelationEdge&) const = default;
};

enum class Mode {
  /// Pairs of positions inside the same hyperedge are not interactions.
  exclude_same_edge,
  /// Plain spmm(E_a^T, E_b) semantics, including same-edge pairs.
  raw_spmm,
};

Mode parse_mode(std::string_view text);
std::string_view to_string(Mode mode);

struct RelationGraph {
  std::size_t num_relations = 0;
  /// Sorted by (from, to, a, b), no duplicates.
  std::vector<RelationEdge> edges;
  std::size_t k_max = 0;

  bool operator==(const RelationGraph&) const = default;
};

/// |V| x |R| matrix for one position a. Entry (v, r) counts the edges of
/// relation r that hold v at position a; stored as COO sorted by (row, col).
struct SparsePositionMatrix {
  struct Entry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    std::int64_t count = 0;
    bool operator==(const Entry&) const = default;
  };
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Entry> entries;
};

SparsePositionMatrix position_matrix(const KnowledgeHypergraph& graph, std::size_t position);

/// Relation graph via k_max^2 sparse products spmm(E_a^T, E_b).
RelationGraph build_relation_graph(const KnowledgeHypergraph& graph, Mode mode = Mode::exclude_same_edge);

/// Same contract, by enumerating every ordered pair of hyperedges. Meant for
/// small graphs (test oracle).
RelationGraph brute_force_relation_graph(const KnowledgeHypergraph& graph, Mode mode = Mode::exclude_same_edge);

/// `r1\tr2\ta\tb` lines, one per edge.
std::string to_tsv(const KnowledgeHypergraph& graph, const RelationGraph& rel_graph);

/// Distinct position pairs that label at least one edge, ascending.
std::vector<PositionPair> distinct_pairs(const RelationGraph& rel_graph);

}  // namespace hyper::relgraph
