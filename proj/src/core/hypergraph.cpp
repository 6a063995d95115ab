#include "hyper/core/hypergraph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hyper {

EntityId Hyperedge::at(std::size_t pos) const {
  if (pos < 1 || pos > entities.size()) {
    throw PositionOutOfRange("position " + std::to_string(pos) + " outside 1.." +
                             std::to_string(entities.size()));
  }
  return entities[pos - 1];
}

std::size_t HyperedgeHash::operator()(const Hyperedge& edge) const {
  // FNV-1a over the relation and the ordered tuple.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  };
  mix(edge.relation.index);
  mix(edge.entities.size());
  for (EntityId v : edge.entities) mix(v.index);
  return static_cast<std::size_t>(h);
}

std::uint32_t Vocabulary::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool FactSet::insert(const Hyperedge& edge) { return facts_.insert(edge).second; }

void FactSet::insert(std::span<const Hyperedge> edges) {
  for (const auto& e : edges) facts_.insert(e);
}

bool FactSet::contains(const Hyperedge& edge) const { return facts_.count(edge) > 0; }

bool FactSet::contains_with(const Hyperedge& edge, std::size_t position, EntityId candidate) const {
  Hyperedge probe = edge;
  probe.entities.at(position - 1) = candidate;
  return contains(probe);
}

std::size_t KnowledgeHypergraph::max_arity() const {
  std::size_t k = 0;
  for (const auto& e : edges_) k = std::max(k, e.arity());
  return k;
}

std::span<const Incidence> KnowledgeHypergraph::incidence_of(EntityId v) const {
  if (v.index >= entities_.size()) {
    throw UnknownEntity("entity index " + std::to_string(v.index) + " not in graph");
  }
  const std::size_t begin = incidence_offsets_[v.index];
  const std::size_t end = incidence_offsets_[v.index + 1];
  return {incidence_.data() + begin, end - begin};
}

EntityId KnowledgeHypergraph::entity(std::string_view name) const {
  auto idx = entities_.find(name);
  if (!idx) throw UnknownEntity("unknown entity '" + std::string(name) + "'");
  return EntityId{*idx};
}

RelationId KnowledgeHypergraph::relation(std::string_view name) const {
  auto idx = relations_.find(name);
  if (!idx) throw UnknownRelation("unknown relation '" + std::string(name) + "'");
  return RelationId{*idx};
}

std::optional<std::size_t> KnowledgeHypergraph::find_edge(const Hyperedge& edge) const {
  auto it = edge_index_.find(edge);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeHypergraph::edges_with_repeats() const {
  std::size_t count = 0;
  std::vector<EntityId> sorted;
  for (const auto& e : edges_) {
    sorted = e.entities;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------

GraphBuilder::GraphBuilder(const KnowledgeHypergraph& base)
    : entities_(base.entities_),
      relations_(base.relations_),
      arity_(base.arity_),
      edges_(base.edges_),
      seen_(base.edges_) {}

EntityId GraphBuilder::add_entity(std::string_view name) { return EntityId{entities_.intern(name)}; }

RelationId GraphBuilder::add_relation(std::string_view name, std::size_t arity) {
  if (arity == 0) throw ParseError("relation '" + std::string(name) + "' must have arity >= 1");
  const auto before = relations_.size();
  const auto idx = relations_.intern(name);
  if (idx == before) {
    arity_.push_back(arity);
  } else if (arity_[idx] != arity) {
    throw ArityConflict("relation '" + std::string(name) + "' seen with arity " +
                        std::to_string(arity_[idx]) + " and " + std::to_string(arity));
  }
  return RelationId{idx};
}

Hyperedge GraphBuilder::intern(std::string_view relation, std::span<const std::string> entities) {
  Hyperedge edge;
  edge.relation = add_relation(relation, entities.size());
  edge.entities.reserve(entities.size());
  for (const auto& name : entities) edge.entities.push_back(add_entity(name));
  return edge;
}

bool GraphBuilder::add_edge(const Hyperedge& edge) {
  if (edge.relation.index >= arity_.size()) throw UnknownRelation("relation index out of range");
  if (edge.entities.size() != arity_[edge.relation.index]) {
    throw ArityConflict("edge of relation '" + relations_.name(edge.relation.index) + "' has " +
                        std::to_string(edge.entities.size()) + " arguments, expected " +
                        std::to_string(arity_[edge.relation.index]));
  }
  for (EntityId v : edge.entities) {
    if (v.index >= entities_.size()) throw UnknownEntity("entity index out of range");
  }
  if (!seen_.insert(edge)) {
    ++duplicates_;
    return false;
  }
  edges_.push_back(edge);
  return true;
}

bool GraphBuilder::add_fact(std::string_view relation, std::span<const std::string> entities) {
  return add_edge(intern(relation, entities));
}

KnowledgeHypergraph GraphBuilder::build() const& {
  GraphBuilder copy = *this;
  return std::move(copy).build();
}

KnowledgeHypergraph GraphBuilder::build() && {
  KnowledgeHypergraph g;
  g.entities_ = std::move(entities_);
  g.relations_ = std::move(relations_);
  g.arity_ = std::move(arity_);
  g.edges_ = std::move(edges_);
  g.duplicates_dropped_ = duplicates_;

  const std::size_t n = g.entities_.size();
  std::vector<std::size_t> counts(n + 1, 0);
  for (const auto& e : g.edges_) {
    for (EntityId v : e.entities) ++counts[v.index + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  g.incidence_offsets_ = counts;
  g.incidence_.resize(counts[n]);
  std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
  // Edges are visited in index order and positions ascending, so every list
  // comes out sorted without an explicit sort.
  for (std::size_t ei = 0; ei < g.edges_.size(); ++ei) {
    const auto& e = g.edges_[ei];
    for (std::size_t p = 0; p < e.entities.size(); ++p) {
      g.incidence_[cursor[e.entities[p].index]++] = Incidence{ei, p + 1};
    }
  }
  g.edge_index_.reserve(g.edges_.size());
  for (std::size_t ei = 0; ei < g.edges_.size(); ++ei) g.edge_index_.emplace(g.edges_[ei], ei);
  return g;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename Fn>
std::size_t for_each_fact(std::string_view text, const ParseOptions& options, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t facts = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected relation and at least one entity");
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty field");
    }
    if (!options.allow_reserved_names) {
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (std::string_view(fields[i]).starts_with(kEdgeNodePrefix)) {
          throw ParseError("line " + std::to_string(line_no) + ": entity name '" + fields[i] +
                           "' uses the reserved prefix " + std::string(kEdgeNodePrefix));
        }
      }
    }
    std::span<const std::string> args(fields.data() + 1, fields.size() - 1);
    fn(fields[0], args);
    ++facts;
  }
  return facts;
}

}  // namespace

KnowledgeHypergraph parse_facts(std::string_view text, const ParseOptions& options) {
  GraphBuilder builder;
  const auto facts = for_each_fact(text, options, [&](const std::string& rel, std::span<const std::string> args) {
    builder.add_fact(rel, args);
  });
  if (facts == 0) throw EmptyFile("fact file contains no facts");
  return std::move(builder).build();
}

std::vector<Hyperedge> parse_facts_into(GraphBuilder& builder, std::string_view text,
                                        const ParseOptions& options) {
  std::vector<Hyperedge> out;
  for_each_fact(text, options, [&](const std::string& rel, std::span<const std::string> args) {
    out.push_back(builder.intern(rel, args));
  });
  return out;
}

std::string serialize_facts(const KnowledgeHypergraph& graph, std::span<const Hyperedge> edges) {
  std::ostringstream os;
  for (const auto& e : edges) {
    os << graph.relation_name(e.relation);
    for (EntityId v : e.entities) os << '\t' << graph.entity_name(v);
    os << '\n';
  }
  return os.str();
}

std::string serialize_facts(const KnowledgeHypergraph& graph) {
  return serialize_facts(graph, graph.edges());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

KnowledgeHypergraph read_fact_file(const std::string& path, const ParseOptions& options) {
  return parse_facts(read_text_file(path), options);
}

// ---------------------------------------------------------------------------

std::vector<PositionedEntity> positional_neighborhood(const Hyperedge& edge, std::size_t position) {
  if (position < 1 || position > edge.arity()) {
    throw PositionOutOfRange("position " + std::to_string(position) + " outside 1.." +
                             std::to_string(edge.arity()));
  }
  std::vector<PositionedEntity> out;
  out.reserve(edge.arity() - 1);
  for (std::size_t j = 1; j <= edge.arity(); ++j) {
    if (j != position) out.push_back({edge.entities[j - 1], j});
  }
  return out;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;  // smaller index becomes the root
  }
};

}  // namespace

std::vector<std::size_t> connected_components(const KnowledgeHypergraph& graph) {
  UnionFind uf(graph.num_entities());
  for (const auto& e : graph.edges()) {
    for (std::size_t i = 1; i < e.entities.size(); ++i) uf.unite(e.entities[0].index, e.entities[i].index);
  }
  std::vector<std::size_t> label(graph.num_entities());
  for (std::size_t v = 0; v < label.size(); ++v) label[v] = uf.find(v);
  return label;
}

KnowledgeHypergraph subgraph(const KnowledgeHypergraph& graph, std::span<const std::size_t> edge_indices) {
  GraphBuilder builder;
  std::vector<std::string> names;
  for (std::size_t ei : edge_indices) {
    const auto& e = graph.edge(ei);
    names.clear();
    for (EntityId v : e.entities) names.push_back(graph.entity_name(v));
    builder.add_fact(graph.relation_name(e.relation), names);
  }
  return std::move(builder).build();
}

KnowledgeHypergraph giant_connected_component(const KnowledgeHypergraph& graph) {
  if (graph.empty()) throw EmptyGraph("giant connected component of an empty graph");
  const auto label = connected_components(graph);
  // Only entities that occur in some edge form components.
  std::vector<std::size_t> size(graph.num_entities(), 0);
  std::vector<char> used(graph.num_entities(), 0);
  for (const auto& e : graph.edges()) {
    for (EntityId v : e.entities) used[v.index] = 1;
  }
  for (std::size_t v = 0; v < label.size(); ++v) {
    if (used[v]) ++size[label[v]];
  }
  // Roots are the smallest index of their component, so scanning roots in
  // ascending order and keeping the first strict maximum implements the tie rule.
  std::size_t best = 0;
  std::size_t best_size = 0;
  for (std::size_t v = 0; v < size.size(); ++v) {
    if (size[v] > best_size) {
      best = v;
      best_size = size[v];
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t ei = 0; ei < graph.num_edges(); ++ei) {
    if (label[graph.edge(ei).entities.front().index] == best) keep.push_back(ei);
  }
  return subgraph(graph, keep);
}

Query query_of_fact(const Hyperedge& edge, std::size_t masked_position) {
  Query q;
  q.relation = edge.relation;
  q.masked_position = masked_position;
  q.observed = positional_neighborhood(edge, masked_position);
  return q;
}

std::vector<Query> queries_of_fact(const Hyperedge& edge) {
  std::vector<Query> out;
  out.reserve(edge.arity());
  for (std::size_t t = 1; t <= edge.arity(); ++t) out.push_back(query_of_fact(edge, t));
  return out;
}

Hyperedge complete_query(const Query& query, EntityId candidate) {
  Hyperedge e;
  e.relation = query.relation;
  e.entities.resize(query.arity());
  for (const auto& pe : query.observed) e.entities.at(pe.position - 1) = pe.entity;
  e.entities.at(query.masked_position - 1) = candidate;
  return e;
}

}  // namespace hyper
