#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hyper/core/hypergraph.hpp"
#include "hyper/tensor/init.hpp"

namespace hyper::data {

using tensor::Rng;

// ----- inductive splits ---------------------------------------------------------

struct SplitParams {
  std::size_t n_train = 1;
  std::size_t n_test = 1;
  double p_rel = 0.0;
  double p_tri = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Training graph and inference graph over disjoint entity sets. `aux`,
/// `valid` and `test` partition the inference facts and are expressed in
/// the vocabulary of `inference` (the full inference hypergraph).
struct InductiveSplit {
  KnowledgeHypergraph train;
  KnowledgeHypergraph inference;
  std::vector<Hyperedge> aux, valid, test;
  /// Relations of the inference graph that do not occur in `train`.
  std::vector<std::string> unseen_relations;
  /// Fraction of inference facts whose relation is unseen in training.
  double unseen_fraction = 0;
  /// Valid/test facts dropped because their relation occurs in neither aux nor train.
  std::size_t dropped_no_evidence = 0;
};

/// Throws DegenerateSplit when a stage leaves nothing.
InductiveSplit generate_split(const KnowledgeHypergraph& graph, const SplitParams& params);

/// Graph over `facts`, sharing `base`'s vocabularies (entities without a fact
/// stay as isolated nodes).
KnowledgeHypergraph with_vocabulary(const KnowledgeHypergraph& base, const std::vector<Hyperedge>& facts);

// ----- reification ----------------------------------------------------------------

/// Each fact r(u_1..u_k) becomes an edge node `__edge_n` with facts
/// `r-i(__edge_n, u_i)`.
KnowledgeHypergraph reify_positional(const KnowledgeHypergraph& graph);
KnowledgeHypergraph unreify_positional(const KnowledgeHypergraph& reified);

/// Each fact becomes an edge node with `hasEntity_i(__edge_n, u_i)` and
/// `hasRelationType(__edge_n, r)`; relations become nodes.
KnowledgeHypergraph reify_relnode(const KnowledgeHypergraph& graph);
KnowledgeHypergraph unreify_relnode(const KnowledgeHypergraph& reified);

inline constexpr std::string_view kHasRelationType = "hasRelationType";
inline constexpr std::string_view kHasEntityPrefix = "hasEntity_";

/// A hyperedge query encoded against a positionally reified graph.
struct ReifiedQuery {
  KnowledgeHypergraph augmented;
  std::vector<Hyperedge> augmentation;  ///< q-i(edge, u_i), i != t
  Query tail_query;                      ///< q-t(edge, ?)
  /// Candidates for the tail query: every entity that is not an edge node.
  std::vector<EntityId> candidates;
};

/// `query` is expressed in the original hypergraph `original`; `reified`
/// must be `reify_positional(original)` (or a graph sharing its names).
ReifiedQuery reified_query_subgraph(const KnowledgeHypergraph& original, const KnowledgeHypergraph& reified,
                                    const Query& query);

bool is_edge_node(std::string_view name);

// ----- ablations and statistics ---------------------------------------------------

/// Shuffles the arguments of `round(fraction * n)` facts of `relation`, each
/// by its own random permutation. A shuffle that would duplicate an existing
/// fact is redrawn (up to 32 times, then the fact is left as is), so the
/// number of facts is preserved. Throws UnknownRelation.
KnowledgeHypergraph corrupt_positions(const KnowledgeHypergraph& graph, RelationId relation, double fraction,
                                      Rng& rng);

/// Same corruption applied to a list of facts (which need not be a graph).
std::vector<Hyperedge> corrupt_facts(const std::vector<Hyperedge>& facts, RelationId relation, double fraction,
                                     Rng& rng);

struct GraphStats {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::size_t num_edges = 0;
  std::size_t max_arity = 0;
  std::map<std::size_t, std::size_t> arity_histogram;  ///< arity -> number of facts
};

GraphStats stats(const KnowledgeHypergraph& graph);
/// Human-readable table with counts and percentages.
std::string to_text(const GraphStats& s);

// ----- synthetic corpora ------------------------------------------------------------

/// Rule-generated research-world corpus. Per cluster (3 people, one
/// organisation, two topics, a shared city):
///   livesIn(P, X), employs(O, P, X), project(P, Y, X, O) for both topics,
///   locatedIn(O, X), researchArea(O, Y).
/// The corpus is closed under these rules: every implied fact is present.
struct CorpusParams {
  std::size_t clusters = 20;
  std::size_t cities = 5;
  std::uint64_t seed = 0;  ///< only shuffles fact order
};
KnowledgeHypergraph synthetic_corpus(const CorpusParams& params = {});

/// Random facts over `entities` entities and `relations` relations with
/// arities cycling through [min_arity, max_arity]. Entities are grouped in
/// communities of `community` members; each fact draws its arguments from
/// one community with probability `locality`, otherwise from anywhere.
struct RandomGraphParams {
  std::size_t entities = 1000;
  std::size_t relations = 12;
  std::size_t facts = 2000;
  std::size_t min_arity = 2;
  std::size_t max_arity = 4;
  std::size_t community = 20;
  double locality = 0.9;
  std::uint64_t seed = 0;
};
KnowledgeHypergraph random_hypergraph(const RandomGraphParams& params);

/// Random split of fact indices into three parts of the given fractions
/// (the remainder goes to the first part).
struct FactSplit {
  std::vector<Hyperedge> train, valid, test;
};
FactSplit split_facts(const KnowledgeHypergraph& graph, double valid_fraction, double test_fraction, Rng& rng);

/// Isomorphic copy with every entity and relation renamed and the
/// vocabularies and fact order permuted. `entity_map[v]` and
/// `relation_map[r]` give the new ids.
struct Relabeling {
  KnowledgeHypergraph graph;
  std::vector<std::uint32_t> entity_map;
  std::vector<std::uint32_t> relation_map;
  Hyperedge apply(const Hyperedge& edge) const;
  Query apply(const Query& query) const;
};
Relabeling relabel(const KnowledgeHypergraph& graph, Rng& rng, const std::string& prefix = "x");

}  // namespace hyper::data
