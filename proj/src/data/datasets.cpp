#include "hyper/data/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hyper::data {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(tensor::uniform01(rng) * static_cast<double>(n));
}

template <typename V>
void shuffle(V& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

/// Edges of the largest co-occurrence component among `edges`; ties go to the
/// component with the smallest entity index. Order is preserved.
std::vector<std::size_t> giant_component_edges(const KnowledgeHypergraph& graph, const std::vector<std::size_t>& edges) {
  if (edges.empty()) return {};
  UnionFind uf(graph.num_entities());
  for (std::size_t ei : edges) {
    const auto& e = graph.edge(ei);
    for (std::size_t i = 1; i < e.arity(); ++i) uf.unite(e.entities[0].index, e.entities[i].index);
  }
  std::vector<std::size_t> size(graph.num_entities(), 0);
  std::vector<char> counted(graph.num_entities(), 0);
  for (std::size_t ei : edges) {
    for (EntityId v : graph.edge(ei).entities) {
      if (!counted[v.index]) {
        counted[v.index] = 1;
        ++size[uf.find(v.index)];
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t r = 0; r < size.size(); ++r) {
    if (size[r] > size[best]) best = r;
  }
  std::vector<std::size_t> out;
  for (std::size_t ei : edges) {
    if (uf.find(graph.edge(ei).entities[0].index) == best) out.push_back(ei);
  }
  return out;
}

/// Sampled entities plus every entity sharing an edge with one of them.
std::vector<char> sample_with_neighbors(const KnowledgeHypergraph& graph, const std::vector<std::size_t>& edges,
                                        std::size_t count, Rng& rng) {
  std::vector<char> present(graph.num_entities(), 0);
  std::vector<std::vector<std::size_t>> incident(graph.num_entities());
  for (std::size_t ei : edges) {
    for (EntityId v : graph.edge(ei).entities) {
      present[v.index] = 1;
      incident[v.index].push_back(ei);
    }
  }
  std::vector<std::uint32_t> pool;
  for (std::uint32_t v = 0; v < present.size(); ++v) {
    if (present[v]) pool.push_back(v);
  }
  shuffle(pool, rng);
  pool.resize(std::min(count, pool.size()));
  std::vector<char> chosen(graph.num_entities(), 0);
  for (std::uint32_t v : pool) {
    chosen[v] = 1;
    for (std::size_t ei : incident[v]) {
      for (EntityId u : graph.edge(ei).entities) chosen[u.index] = 1;
    }
  }
  return chosen;
}

bool all_in(const Hyperedge& e, const std::vector<char>& set) {
  return std::all_of(e.entities.begin(), e.entities.end(), [&](EntityId v) { return set[v.index] != 0; });
}

}  // namespace

void SplitParams::validate() const {
  if (n_train < 1 || n_test < 1) throw Error("entity sample counts must be at least 1");
  if (p_rel < 0 || p_rel > 1 || p_tri < 0 || p_tri > 1) throw Error("p_rel and p_tri must lie in [0, 1]");
}

KnowledgeHypergraph with_vocabulary(const KnowledgeHypergraph& base, const std::vector<Hyperedge>& facts) {
  GraphBuilder builder;
  for (const auto& name : base.entities().names()) builder.add_entity(name);
  for (std::uint32_t r = 0; r < base.num_relations(); ++r) {
    builder.add_relation(base.relation_name(RelationId{r}), base.arity(RelationId{r}));
  }
  for (const auto& e : facts) builder.add_edge(e);
  return std::move(builder).build();
}

InductiveSplit generate_split(const KnowledgeHypergraph& source, const SplitParams& params) {
  params.validate();
  if (source.empty()) throw DegenerateSplit("source graph has no facts");
  Rng rng(params.seed);
  const KnowledgeHypergraph graph = giant_connected_component(source);

  std::vector<std::uint32_t> relations(graph.num_relations());
  std::iota(relations.begin(), relations.end(), 0);
  shuffle(relations, rng);
  const auto n_inf_rel =
      static_cast<std::size_t>(std::llround(params.p_rel * static_cast<double>(relations.size())));
  std::vector<char> rel_inf(graph.num_relations(), 0), rel_train(graph.num_relations(), 0);
  for (std::size_t i = 0; i < relations.size(); ++i) (i < n_inf_rel ? rel_inf : rel_train)[relations[i]] = 1;

  std::vector<std::size_t> all_edges(graph.num_edges());
  std::iota(all_edges.begin(), all_edges.end(), 0);
  const auto v_train = sample_with_neighbors(graph, all_edges, params.n_train, rng);
  std::vector<std::size_t> e_train;
  for (std::size_t ei : all_edges) {
    const auto& e = graph.edge(ei);
    if (rel_train[e.relation.index] && all_in(e, v_train)) e_train.push_back(ei);
  }
  e_train = giant_component_edges(graph, e_train);
  if (e_train.empty()) throw DegenerateSplit("training graph is empty");

  std::vector<char> in_train(graph.num_entities(), 0);
  std::fill(rel_train.begin(), rel_train.end(), 0);
  for (std::size_t ei : e_train) {
    const auto& e = graph.edge(ei);
    rel_train[e.relation.index] = 1;
    for (EntityId v : e.entities) in_train[v.index] = 1;
  }

  std::vector<std::size_t> rest;
  for (std::size_t ei : all_edges) {
    const auto& e = graph.edge(ei);
    if (std::none_of(e.entities.begin(), e.entities.end(), [&](EntityId v) { return in_train[v.index] != 0; })) {
      rest.push_back(ei);
    }
  }
  if (rest.empty()) throw DegenerateSplit("no facts remain outside the training entities");
  const auto v_inf = sample_with_neighbors(graph, rest, params.n_test, rng);
  std::vector<std::size_t> x, y;
  for (std::size_t ei : rest) {
    const auto& e = graph.edge(ei);
    if (!all_in(e, v_inf)) continue;
    if (rel_train[e.relation.index]) x.push_back(ei);
    else if (rel_inf[e.relation.index]) y.push_back(ei);
  }
  // Downsample the over-represented side to reach |X| : |Y| = (1 - p_tri) : p_tri.
  const double p = params.p_tri;
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  shuffle(x, rng);
  shuffle(y, rng);
  if (p <= 0) {
    y.clear();
  } else if (p >= 1) {
    x.clear();
  } else if (nx * p > ny * (1 - p)) {
    x.resize(static_cast<std::size_t>(std::llround(ny * (1 - p) / p)));
  } else {
    y.resize(static_cast<std::size_t>(std::llround(nx * p / (1 - p))));
  }
  std::vector<std::size_t> e_inf = x;
  e_inf.insert(e_inf.end(), y.begin(), y.end());
  std::sort(e_inf.begin(), e_inf.end());
  e_inf = giant_component_edges(graph, e_inf);
  if (e_inf.empty()) throw DegenerateSplit("inference graph is empty");

  InductiveSplit split;
  split.train = subgraph(graph, e_train);
  split.inference = subgraph(graph, e_inf);

  std::size_t unseen = 0;
  std::set<std::string> unseen_names;
  for (std::size_t ei : e_inf) {
    const auto r = graph.edge(ei).relation;
    if (!rel_train[r.index]) {
      ++unseen;
      unseen_names.insert(graph.relation_name(r));
    }
  }
  split.unseen_relations.assign(unseen_names.begin(), unseen_names.end());
  split.unseen_fraction = static_cast<double>(unseen) / static_cast<double>(e_inf.size());

  // 3:1:1 partition at fact granularity, remainder to aux.
  std::vector<std::size_t> order(split.inference.num_edges());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const std::size_t n = order.size();
  const std::size_t n_valid = n / 5, n_test = n / 5;
  std::vector<Hyperedge> valid, test;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = split.inference.edge(order[i]);
    if (i < n_valid) valid.push_back(e);
    else if (i < n_valid + n_test) test.push_back(e);
    else split.aux.push_back(e);
  }
  std::sort(split.aux.begin(), split.aux.end(), [&](const Hyperedge& a, const Hyperedge& b) {
    return *split.inference.find_edge(a) < *split.inference.find_edge(b);
  });

  std::unordered_set<std::string> evidence;
  for (const auto& e : split.aux) evidence.insert(split.inference.relation_name(e.relation));
  for (const auto& e : split.train.edges()) evidence.insert(split.train.relation_name(e.relation));
  auto keep = [&](std::vector<Hyperedge>& facts, std::vector<Hyperedge>& out) {
    for (auto& e : facts) {
      if (evidence.contains(split.inference.relation_name(e.relation))) out.push_back(std::move(e));
      else ++split.dropped_no_evidence;
    }
  };
  keep(valid, split.valid);
  keep(test, split.test);
  return split;
}

// ----- reification ----------------------------------------------------------------

bool is_edge_node(std::string_view name) { return name.starts_with(kEdgeNodePrefix); }

namespace {

std::string edge_node(std::size_t n) { return std::string(kEdgeNodePrefix) + std::to_string(n); }

/// Groups binary facts by their edge-node subject.
struct EdgeGroups {
  std::vector<std::string> order;  ///< edge nodes in first-appearance order
  std::unordered_map<std::string, std::vector<std::pair<std::string, std::string>>> facts;  ///< (relation, object)
};

EdgeGroups group_by_edge(const KnowledgeHypergraph& reified) {
  EdgeGroups g;
  for (const auto& e : reified.edges()) {
    if (e.arity() != 2) throw ParseError("reified graph contains a non-binary fact");
    const auto& subject = reified.entity_name(e.entities[0]);
    if (!is_edge_node(subject)) throw ParseError("reified fact subject '" + subject + "' is not an edge node");
    auto [it, fresh] = g.facts.try_emplace(subject);
    if (fresh) g.order.push_back(subject);
    it->second.emplace_back(reified.relation_name(e.relation), reified.entity_name(e.entities[1]));
  }
  return g;
}

std::size_t parse_position(std::string_view text) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("bad position suffix '" + std::string(text) + "'");
  }
  return std::stoul(std::string(text));
}

std::vector<std::string> assemble(std::vector<std::pair<std::size_t, std::string>> slots, const std::string& node) {
  std::sort(slots.begin(), slots.end());
  std::vector<std::string> args;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].first != i + 1) throw ParseError("edge node '" + node + "' has missing or repeated positions");
    args.push_back(slots[i].second);
  }
  return args;
}

}  // namespace

KnowledgeHypergraph reify_positional(const KnowledgeHypergraph& graph) {
  GraphBuilder builder;
  for (std::size_t n = 0; n < graph.num_edges(); ++n) {
    const auto& e = graph.edge(n);
    const auto node = edge_node(n);
    for (std::size_t i = 1; i <= e.arity(); ++i) {
      const std::string args[2] = {node, graph.entity_name(e.at(i))};
      builder.add_fact(graph.relation_name(e.relation) + "-" + std::to_string(i), args);
    }
  }
  return std::move(builder).build();
}

KnowledgeHypergraph unreify_positional(const KnowledgeHypergraph& reified) {
  const auto groups = group_by_edge(reified);
  GraphBuilder builder;
  for (const auto& node : groups.order) {
    std::string relation;
    std::vector<std::pair<std::size_t, std::string>> slots;
    for (const auto& [rel, obj] : groups.facts.at(node)) {
      const auto dash = rel.rfind('-');
      if (dash == std::string::npos) throw ParseError("relation '" + rel + "' lacks a position suffix");
      const auto base = rel.substr(0, dash);
      if (!relation.empty() && base != relation) throw ParseError("edge node '" + node + "' mixes relations");
      relation = base;
      slots.emplace_back(parse_position(std::string_view(rel).substr(dash + 1)), obj);
    }
    builder.add_fact(relation, assemble(std::move(slots), node));
  }
  return std::move(builder).build();
}

KnowledgeHypergraph reify_relnode(const KnowledgeHypergraph& graph) {
  GraphBuilder builder;
  for (std::size_t n = 0; n < graph.num_edges(); ++n) {
    const auto& e = graph.edge(n);
    const auto node = edge_node(n);
    for (std::size_t i = 1; i <= e.arity(); ++i) {
      const std::string args[2] = {node, graph.entity_name(e.at(i))};
      builder.add_fact(std::string(kHasEntityPrefix) + std::to_string(i), args);
    }
    const std::string args[2] = {node, graph.relation_name(e.relation)};
    builder.add_fact(kHasRelationType, args);
  }
  return std::move(builder).build();
}

KnowledgeHypergraph unreify_relnode(const KnowledgeHypergraph& reified) {
  const auto groups = group_by_edge(reified);
  GraphBuilder builder;
  for (const auto& node : groups.order) {
    std::string relation;
    std::vector<std::pair<std::size_t, std::string>> slots;
    for (const auto& [rel, obj] : groups.facts.at(node)) {
      if (rel == kHasRelationType) {
        if (!relation.empty()) throw ParseError("edge node '" + node + "' has several relation types");
        relation = obj;
      } else if (rel.starts_with(kHasEntityPrefix)) {
        slots.emplace_back(parse_position(std::string_view(rel).substr(kHasEntityPrefix.size())), obj);
      } else {
        throw ParseError("unexpected relation '" + rel + "' in a relation-node reification");
      }
    }
    if (relation.empty()) throw ParseError("edge node '" + node + "' has no relation type");
    builder.add_fact(relation, assemble(std::move(slots), node));
  }
  return std::move(builder).build();
}

ReifiedQuery reified_query_subgraph(const KnowledgeHypergraph& original, const KnowledgeHypergraph& reified,
                                    const Query& query) {
  const std::string q = original.relation_name(query.relation);
  std::size_t counter = 0;
  std::string node;
  do {
    node = std::string(kEdgeNodePrefix) + "q" + std::to_string(counter++);
  } while (reified.entities().find(node));

  GraphBuilder builder(reified);
  ReifiedQuery out;
  for (const auto& pe : query.observed) {
    const std::string args[2] = {node, original.entity_name(pe.entity)};
    auto edge = builder.intern(q + "-" + std::to_string(pe.position), args);
    builder.add_edge(edge);
    out.augmentation.push_back(edge);
  }
  const EntityId edge_id = builder.add_entity(node);
  const RelationId tail = builder.add_relation(q + "-" + std::to_string(query.masked_position), 2);
  out.augmented = std::move(builder).build();
  out.tail_query.relation = tail;
  out.tail_query.observed = {PositionedEntity{edge_id, 1}};
  out.tail_query.masked_position = 2;
  for (std::uint32_t v = 0; v < out.augmented.num_entities(); ++v) {
    if (!is_edge_node(out.augmented.entity_name(EntityId{v}))) out.candidates.push_back(EntityId{v});
  }
  return out;
}

// ----- ablations and statistics ---------------------------------------------------

std::vector<Hyperedge> corrupt_facts(const std::vector<Hyperedge>& facts, RelationId relation, double fraction,
                                     Rng& rng) {
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (facts[i].relation == relation) targets.push_back(i);
  }
  if (targets.empty()) throw UnknownRelation("relation " + std::to_string(relation.index) + " has no facts");
  shuffle(targets, rng);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(targets.size())));
  targets.resize(std::min(count, targets.size()));
  std::sort(targets.begin(), targets.end());

  std::vector<Hyperedge> out = facts;
  FactSet present{std::span<const Hyperedge>(out)};
  for (std::size_t i : targets) {
    const Hyperedge original = out[i];
    for (int attempt = 0; attempt < 32; ++attempt) {
      Hyperedge candidate = original;
      shuffle(candidate.entities, rng);
      if (candidate == original || !present.contains(candidate)) {
        out[i] = candidate;
        present.insert(candidate);
        break;
      }
    }
  }
  return out;
}

KnowledgeHypergraph corrupt_positions(const KnowledgeHypergraph& graph, RelationId relation, double fraction,
                                      Rng& rng) {
  if (relation.index >= graph.num_relations()) throw UnknownRelation("relation outside graph");
  return with_vocabulary(graph, corrupt_facts(graph.edges(), relation, fraction, rng));
}

GraphStats stats(const KnowledgeHypergraph& graph) {
  GraphStats s;
  s.num_entities = graph.num_entities();
  s.num_relations = graph.num_relations();
  s.num_edges = graph.num_edges();
  s.max_arity = graph.max_arity();
  for (const auto& e : graph.edges()) ++s.arity_histogram[e.arity()];
  return s;
}

std::string to_text(const GraphStats& s) {
  std::ostringstream os;
  os << "entities\t" << s.num_entities << '\n'
     << "relations\t" << s.num_relations << '\n'
     << "facts\t" << s.num_edges << '\n'
     << "max_arity\t" << s.max_arity << '\n'
     << "arity\tfacts\tpercent\n";
  for (const auto& [k, n] : s.arity_histogram) {
    const double pct = s.num_edges ? 100.0 * static_cast<double>(n) / static_cast<double>(s.num_edges) : 0.0;
    os << k << '\t' << n << '\t' << std::fixed;
    os.precision(2);
    os << pct << '\n';
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

// ----- synthetic corpora ------------------------------------------------------------

KnowledgeHypergraph synthetic_corpus(const CorpusParams& params) {
  std::vector<std::pair<std::string, std::vector<std::string>>> facts;
  for (std::size_t c = 0; c < params.clusters; ++c) {
    const std::string id = std::to_string(c);
    const std::string city = "city" + std::to_string(c % params.cities);
    const std::string org = "org" + id;
    const std::string topics[2] = {"topic" + id + "a", "topic" + id + "b"};
    facts.push_back({"locatedIn", {org, city}});
    for (const auto& y : topics) facts.push_back({"researchArea", {org, y}});
    for (int p = 0; p < 3; ++p) {
      const std::string person = "person" + id + static_cast<char>('a' + p);
      facts.push_back({"livesIn", {person, city}});
      facts.push_back({"employs", {org, person, city}});
      for (const auto& y : topics) facts.push_back({"project", {person, y, city, org}});
    }
  }
  Rng rng(params.seed);
  shuffle(facts, rng);
  GraphBuilder builder;
  for (const auto& [r, args] : facts) builder.add_fact(r, args);
  return std::move(builder).build();
}

KnowledgeHypergraph random_hypergraph(const RandomGraphParams& params) {
  if (params.entities == 0 || params.relations == 0 || params.min_arity == 0 || params.max_arity < params.min_arity) {
    throw Error("invalid random graph parameters");
  }
  Rng rng(params.seed);
  GraphBuilder builder;
  for (std::size_t v = 0; v < params.entities; ++v) builder.add_entity("e" + std::to_string(v));
  const std::size_t span = params.max_arity - params.min_arity + 1;
  std::vector<RelationId> rels;
  for (std::size_t r = 0; r < params.relations; ++r) {
    rels.push_back(builder.add_relation("r" + std::to_string(r), params.min_arity + r % span));
  }
  const std::size_t community = std::max<std::size_t>(1, std::min(params.community, params.entities));
  const std::size_t communities = (params.entities + community - 1) / community;
  std::size_t attempts = 0;
  std::size_t added = 0;
  while (added < params.facts && attempts < params.facts * 20) {
    ++attempts;
    const RelationId r = rels[uniform_index(rng, rels.size())];
    const std::size_t k = params.min_arity + r.index % span;
    const bool local = tensor::uniform01(rng) < params.locality;
    const std::size_t base = uniform_index(rng, communities) * community;
    const std::size_t width = std::min(community, params.entities - base);
    Hyperedge e{r, {}};
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t v = local ? base + uniform_index(rng, width) : uniform_index(rng, params.entities);
      e.entities.push_back(EntityId{static_cast<std::uint32_t>(v)});
    }
    if (builder.add_edge(e)) ++added;
  }
  return std::move(builder).build();
}

FactSplit split_facts(const KnowledgeHypergraph& graph, double valid_fraction, double test_fraction, Rng& rng) {
  std::vector<std::size_t> order(graph.num_edges());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const auto n = static_cast<double>(order.size());
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
  FactSplit s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& e = graph.edge(order[i]);
    if (i < n_valid) s.valid.push_back(e);
    else if (i < n_valid + n_test) s.test.push_back(e);
    else s.train.push_back(e);
  }
  auto by_index = [&](const Hyperedge& a, const Hyperedge& b) { return *graph.find_edge(a) < *graph.find_edge(b); };
  std::sort(s.train.begin(), s.train.end(), by_index);
  return s;
}

Hyperedge Relabeling::apply(const Hyperedge& edge) const {
  Hyperedge out{RelationId{relation_map.at(edge.relation.index)}, {}};
  for (EntityId v : edge.entities) out.entities.push_back(EntityId{entity_map.at(v.index)});
  return out;
}

Query Relabeling::apply(const Query& query) const {
  Query out = query;
  out.relation = RelationId{relation_map.at(query.relation.index)};
  for (auto& pe : out.observed) pe.entity = EntityId{entity_map.at(pe.entity.index)};
  return out;
}

Relabeling relabel(const KnowledgeHypergraph& graph, Rng& rng, const std::string& prefix) {
  Relabeling out;
  out.entity_map.resize(graph.num_entities());
  out.relation_map.resize(graph.num_relations());
  std::iota(out.entity_map.begin(), out.entity_map.end(), 0);
  std::iota(out.relation_map.begin(), out.relation_map.end(), 0);
  shuffle(out.entity_map, rng);
  shuffle(out.relation_map, rng);

  std::vector<std::uint32_t> entity_inverse(graph.num_entities()), relation_inverse(graph.num_relations());
  for (std::uint32_t v = 0; v < out.entity_map.size(); ++v) entity_inverse[out.entity_map[v]] = v;
  for (std::uint32_t r = 0; r < out.relation_map.size(); ++r) relation_inverse[out.relation_map[r]] = r;

  GraphBuilder builder;
  for (std::uint32_t v = 0; v < entity_inverse.size(); ++v) builder.add_entity(prefix + "_ent" + std::to_string(v));
  for (std::uint32_t r = 0; r < relation_inverse.size(); ++r) {
    builder.add_relation(prefix + "_rel" + std::to_string(r), graph.arity(RelationId{relation_inverse[r]}));
  }
  std::vector<std::size_t> order(graph.num_edges());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (std::size_t i : order) builder.add_edge(out.apply(graph.edge(i)));
  out.graph = std::move(builder).build();
  return out;
}

}  // namespace hyper::data
