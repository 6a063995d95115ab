#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hyper/core/errors.hpp"

namespace hyper {

struct EntityId {
  std::uint32_t index = 0;
  auto operator<=>(const EntityId&) const = default;
};

struct RelationId {
  std::uint32_t index = 0;
  auto operator<=>(const RelationId&) const = default;
};

/// An ordered fact r(u_1, ..., u_k). Positions are 1-based everywhere they
/// cross an interface; `entities` itself is a plain 0-based vector.
struct Hyperedge {
  RelationId relation;
  std::vector<EntityId> entities;

  std::size_t arity() const { return entities.size(); }
  /// Entity at 1-based position `pos`.
  EntityId at(std::size_t pos) const;
  bool operator==(const Hyperedge&) const = default;
};

struct HyperedgeHash {
  std::size_t operator()(const Hyperedge& edge) const;
};

/// One element of E(v): hyperedge index and the 1-based position v holds.
struct Incidence {
  std::size_t edge = 0;
  std::size_t position = 0;
  bool operator==(const Incidence&) const = default;
};

/// (entity, 1-based position) pair, as used by positional neighbourhoods
/// and by the observed part of a query.
struct PositionedEntity {
  EntityId entity;
  std::size_t position = 0;
  bool operator==(const PositionedEntity&) const = default;
};

/// Bidirectional name <-> dense index map; indices follow insertion order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Link-prediction query (q, u~, t): relation, the ar(q)-1 observed
/// arguments and the masked 1-based position.
struct Query {
  RelationId relation;
  std::vector<PositionedEntity> observed;
  std::size_t masked_position = 1;

  std::size_t arity() const { return observed.size() + 1; }
  bool operator==(const Query&) const = default;
};

/// Hash set of facts keyed by (relation, ordered entity tuple).
class FactSet {
 public:
  FactSet() = default;
  explicit FactSet(std::span<const Hyperedge> edges) { insert(edges); }

  bool insert(const Hyperedge& edge);
  void insert(std::span<const Hyperedge> edges);
  bool contains(const Hyperedge& edge) const;
  /// Would substituting `candidate` at 1-based `position` of `edge` give a
  /// member of the set?
  bool contains_with(const Hyperedge& edge, std::size_t position, EntityId candidate) const;
  std::size_t size() const { return facts_.size(); }

 private:
  std::unordered_set<Hyperedge, HyperedgeHash> facts_;
};

/// Immutable knowledge hypergraph G = (V, E, R) with per-entity incidence
/// lists. Build one with `GraphBuilder` or `parse_facts`.
class KnowledgeHypergraph {
 public:
  KnowledgeHypergraph() = default;

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  const Hyperedge& edge(std::size_t index) const { return edges_.at(index); }

  std::size_t arity(RelationId relation) const { return arity_.at(relation.index); }
  const std::vector<std::size_t>& arities() const { return arity_; }
  /// Largest arity among relations that occur in at least one edge (0 if none).
  std::size_t max_arity() const;

  /// E(v), ordered by edge index then position.
  std::span<const Incidence> incidence_of(EntityId v) const;

  EntityId entity(std::string_view name) const;
  RelationId relation(std::string_view name) const;
  const std::string& entity_name(EntityId v) const { return entities_.name(v.index); }
  const std::string& relation_name(RelationId r) const { return relations_.name(r.index); }

  /// Index of an edge equal to `edge`, if present.
  std::optional<std::size_t> find_edge(const Hyperedge& edge) const;

  /// Number of duplicate facts dropped while building.
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }
  /// Number of edges in which some entity occupies more than one position.
  std::size_t edges_with_repeats() const;

 private:
  friend class GraphBuilder;

  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<std::size_t> arity_;
  std::vector<Hyperedge> edges_;
  std::vector<std::size_t> incidence_offsets_;
  std::vector<Incidence> incidence_;
  std::unordered_map<Hyperedge, std::size_t, HyperedgeHash> edge_index_;
  std::size_t duplicates_dropped_ = 0;
};

struct ParseOptions {
  /// Accept entity names with the reserved reification prefix.
  bool allow_reserved_names = false;
};

/// Prefix for auxiliary edge nodes introduced by reification.
inline constexpr std::string_view kEdgeNodePrefix = "__edge_";

/// Incremental construction of a `KnowledgeHypergraph`. Vocabularies grow in
/// first-appearance order; duplicate facts are dropped and counted.
class GraphBuilder {
 public:
  GraphBuilder() = default;
  /// Start from the vocabularies, arities and edges of an existing graph.
  explicit GraphBuilder(const KnowledgeHypergraph& base);

  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name, std::size_t arity);

  /// Intern names without adding an edge. Throws ArityConflict.
  Hyperedge intern(std::string_view relation, std::span<const std::string> entities);
  /// Returns false when the fact was a duplicate.
  bool add_edge(const Hyperedge& edge);
  bool add_fact(std::string_view relation, std::span<const std::string> entities);

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }

  KnowledgeHypergraph build() &&;
  KnowledgeHypergraph build() const&;

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<std::size_t> arity_;
  std::vector<Hyperedge> edges_;
  FactSet seen_;
  std::size_t duplicates_ = 0;
};

/// Parsed fact file: either the whole graph, or facts interned against an
/// existing builder (see `parse_facts_into`).
KnowledgeHypergraph parse_facts(std::string_view text, const ParseOptions& options = {});

/// Parse `text` and intern every fact into `builder` without adding edges.
/// Used for query files (valid/test) that share a graph's vocabulary.
std::vector<Hyperedge> parse_facts_into(GraphBuilder& builder, std::string_view text,
                                        const ParseOptions& options = {});

std::string serialize_facts(const KnowledgeHypergraph& graph);
std::string serialize_facts(const KnowledgeHypergraph& graph, std::span<const Hyperedge> edges);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

KnowledgeHypergraph read_fact_file(const std::string& path, const ParseOptions& options = {});

/// N_i(e): every (entity, position) of `edge` except position `position`.
std::vector<PositionedEntity> positional_neighborhood(const Hyperedge& edge, std::size_t position);

/// Sub-hypergraph on the largest co-occurrence component. Ties go to the
/// component holding the smallest entity index. Vocabularies re-densified in
/// order of first appearance among the kept edges.
KnowledgeHypergraph giant_connected_component(const KnowledgeHypergraph& graph);

/// Connected components over co-occurrence; returns a component label per
/// entity (entities in no edge get their own singleton label).
std::vector<std::size_t> connected_components(const KnowledgeHypergraph& graph);

/// Subgraph on the given edges, vocabularies re-densified in first-appearance order.
KnowledgeHypergraph subgraph(const KnowledgeHypergraph& graph, std::span<const std::size_t> edge_indices);

/// One query per position of the fact.
std::vector<Query> queries_of_fact(const Hyperedge& edge);
Query query_of_fact(const Hyperedge& edge, std::size_t masked_position);

/// Rebuild the full fact from a query and a candidate for the masked slot.
Hyperedge complete_query(const Query& query, EntityId candidate);

}  // namespace hyper
