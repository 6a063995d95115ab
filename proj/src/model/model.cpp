#include "hyper/model/model.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace hyper::model {

using tensor::Buffer;
using tensor::Node;
using tensor::Shape;

// ----- configuration --------------------------------------------------------------

void ModelConfig::validate() const {
  posenc::validate(posenc());
  if (rel_layers == 0 && ent_layers == 0) {
    // Degenerate configs are allowed for tests; nothing to check.
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "dim=" << dim << '\n'
     << "rel_layers=" << rel_layers << '\n'
     << "ent_layers=" << ent_layers << '\n'
     << "pos_encoding=" << posenc::to_string(pos_kind) << '\n'
     << "pos_seed=" << pos_seed << '\n'
     << "relgraph_mode=" << relgraph::to_string(rel_mode) << '\n';
  return os.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "dim") cfg.dim = std::stoul(value);
    else if (key == "rel_layers") cfg.rel_layers = std::stoul(value);
    else if (key == "ent_layers") cfg.ent_layers = std::stoul(value);
    else if (key == "pos_encoding") cfg.pos_kind = posenc::parse_kind(value);
    else if (key == "pos_seed") cfg.pos_seed = std::stoull(value);
    else if (key == "relgraph_mode") cfg.rel_mode = relgraph::parse_mode(value);
  }
  return cfg;
}

// ----- parameters -------------------------------------------------------------------

template <typename T>
Mlp2<T> Mlp2<T>::init(std::size_t in, std::size_t hidden, std::size_t out, tensor::Rng& rng) {
  Mlp2 m;
  m.w1 = tensor::glorot_uniform<T>(in, hidden, rng);
  m.b1 = tensor::constant_parameter<T>({hidden}, T(0));
  m.w2 = tensor::glorot_uniform<T>(hidden, out, rng);
  m.b2 = tensor::constant_parameter<T>({out}, T(0));
  return m;
}

template <typename T>
Tensor<T> Mlp2<T>::forward(const Tensor<T>& x) const {
  return tensor::linear(tensor::relu(tensor::linear(x, w1, b1)), w2, b2);
}

namespace {

template <typename T>
void init_layer(LayerParams<T>& layer, std::size_t d, tensor::Rng& rng) {
  layer.alpha = tensor::constant_parameter<T>({1}, T(0.5));
  layer.update = Mlp2<T>::init(2 * d, d, d, rng);
  layer.ln_gain = tensor::constant_parameter<T>({d}, T(1));
  layer.ln_bias = tensor::constant_parameter<T>({d}, T(0));
}

template <typename T>
void push_mlp(std::vector<std::pair<std::string, Tensor<T>>>& out, const std::string& prefix, const Mlp2<T>& m) {
  out.emplace_back(prefix + ".w1", m.w1);
  out.emplace_back(prefix + ".b1", m.b1);
  out.emplace_back(prefix + ".w2", m.w2);
  out.emplace_back(prefix + ".b2", m.b2);
}

template <typename T>
void push_layer(std::vector<std::pair<std::string, Tensor<T>>>& out, const std::string& prefix,
                const LayerParams<T>& layer) {
  out.emplace_back(prefix + ".alpha", layer.alpha);
  push_mlp(out, prefix + ".update", layer.update);
  out.emplace_back(prefix + ".ln.gain", layer.ln_gain);
  out.emplace_back(prefix + ".ln.bias", layer.ln_bias);
}

template <typename T>
Mlp2<T> clone_mlp(const Mlp2<T>& m) {
  Mlp2<T> c;
  c.w1 = m.w1.clone();
  c.b1 = m.b1.clone();
  c.w2 = m.w2.clone();
  c.b2 = m.b2.clone();
  for (auto* t : {&c.w1, &c.b1, &c.w2, &c.b2}) t->zero_grad();
  return c;
}

template <typename T>
void clone_layer(const LayerParams<T>& src, LayerParams<T>& dst) {
  dst.alpha = src.alpha.clone();
  dst.alpha.zero_grad();
  dst.update = clone_mlp(src.update);
  dst.ln_gain = src.ln_gain.clone();
  dst.ln_gain.zero_grad();
  dst.ln_bias = src.ln_bias.clone();
  dst.ln_bias.zero_grad();
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  tensor::Rng rng(seed);
  const std::size_t d = cfg.dim;
  ModelParams p;
  p.enc_pi = posenc::EncPIParams<T>::init(d, rng);
  p.relation_layers.resize(cfg.rel_layers);
  for (auto& layer : p.relation_layers) init_layer(layer, d, rng);
  p.entity_layers.resize(cfg.ent_layers);
  for (auto& layer : p.entity_layers) {
    init_layer<T>(layer, d, rng);
    layer.relation_transform = Mlp2<T>::init(d, d, d, rng);
  }
  p.decoder = Mlp2<T>::init(d, d, 1, rng);
  return p;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ModelParams<T>::named() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("enc_pi.w1", enc_pi.w1);
  out.emplace_back("enc_pi.b1", enc_pi.b1);
  out.emplace_back("enc_pi.w2", enc_pi.w2);
  out.emplace_back("enc_pi.b2", enc_pi.b2);
  for (std::size_t t = 0; t < relation_layers.size(); ++t) {
    push_layer(out, "rel." + std::to_string(t), relation_layers[t]);
  }
  for (std::size_t l = 0; l < entity_layers.size(); ++l) {
    const std::string prefix = "ent." + std::to_string(l);
    push_layer<T>(out, prefix, entity_layers[l]);
    push_mlp(out, prefix + ".rel_mlp", entity_layers[l].relation_transform);
  }
  push_mlp(out, "dec", decoder);
  return out;
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::tensors() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::clone() const {
  ModelParams c;
  c.enc_pi.w1 = enc_pi.w1.clone();
  c.enc_pi.b1 = enc_pi.b1.clone();
  c.enc_pi.w2 = enc_pi.w2.clone();
  c.enc_pi.b2 = enc_pi.b2.clone();
  for (auto* t : {&c.enc_pi.w1, &c.enc_pi.b1, &c.enc_pi.w2, &c.enc_pi.b2}) t->zero_grad();
  c.relation_layers.resize(relation_layers.size());
  for (std::size_t i = 0; i < relation_layers.size(); ++i) clone_layer(relation_layers[i], c.relation_layers[i]);
  c.entity_layers.resize(entity_layers.size());
  for (std::size_t i = 0; i < entity_layers.size(); ++i) {
    clone_layer<T>(entity_layers[i], c.entity_layers[i]);
    c.entity_layers[i].relation_transform = clone_mlp(entity_layers[i].relation_transform);
  }
  c.decoder = clone_mlp(decoder);
  return c;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& t : tensors()) t.zero_grad();
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

template <typename T>
tensor::Checkpoint to_checkpoint(const ModelConfig& cfg, const ModelParams<T>& params, const std::string& extra) {
  tensor::Checkpoint ck;
  ck.config_text = cfg.to_text() + extra;
  for (const auto& [name, t] : params.named()) ck.tensors.push_back(tensor::store(name, t));
  return ck;
}

ModelConfig config_from_checkpoint(const tensor::Checkpoint& ck) { return ModelConfig::from_text(ck.config_text); }

template <typename T>
ModelParams<T> params_from_checkpoint(const tensor::Checkpoint& ck, const ModelConfig& cfg) {
  auto params = ModelParams<T>::init(cfg, 0);
  for (auto& [name, t] : params.named()) {
    const tensor::StoredTensor* stored = nullptr;
    for (const auto& s : ck.tensors) {
      if (s.name == name) stored = &s;
    }
    if (stored == nullptr) throw ConfigMismatch("checkpoint lacks tensor '" + name + "'");
    if (stored->shape != t.shape()) {
      throw ConfigMismatch("tensor '" + name + "' has shape " + tensor::shape_string(stored->shape) +
                           ", model expects " + tensor::shape_string(t.shape()));
    }
    auto dst = t.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(stored->values[i]);
  }
  return params;
}

// ----- graph context ------------------------------------------------------------------

template <typename T>
GraphContext<T>::GraphContext(const KnowledgeHypergraph& graph, const ModelConfig& cfg) : graph_(&graph) {
  if (graph.empty()) {
    rel_graph_.num_relations = graph.num_relations();
  } else {
    rel_graph_ = relgraph::build_relation_graph(graph, cfg.rel_mode);
  }
  pairs_ = relgraph::distinct_pairs(rel_graph_);
  std::map<relgraph::PositionPair, std::uint32_t> pair_index;
  for (std::size_t i = 0; i < pairs_.size(); ++i) pair_index[pairs_[i]] = static_cast<std::uint32_t>(i);
  for (const auto& e : rel_graph_.edges) {
    rel_src_.push_back(e.from.index);
    rel_dst_.push_back(e.to.index);
    rel_pair_.push_back(pair_index.at(e.pair));
  }

  edge_offsets_.reserve(graph.num_edges() + 1);
  edge_offsets_.push_back(0);
  for (const auto& e : graph.edges()) {
    for (EntityId v : e.entities) edge_entities_.push_back(v.index);
    edge_offsets_.push_back(static_cast<std::uint32_t>(edge_entities_.size()));
    edge_relations_.push_back(e.relation.index);
  }

  std::size_t max_position = 1;
  for (auto k : graph.arities()) max_position = std::max(max_position, k);
  positions_ = posenc::position_table<T>(max_position, cfg.posenc());
}

// ----- fused kernels ------------------------------------------------------------------

template <typename T>
Tensor<T> relation_aggregate(const Tensor<T>& h, const Tensor<T>& alpha, std::span<const T> p1, const Tensor<T>& x,
                             std::span<const std::uint32_t> src, std::span<const std::uint32_t> dst,
                             std::span<const std::uint32_t> pair) {
  const std::size_t d = h.cols();
  const std::size_t n = h.rows();
  if (x.cols() != d || p1.size() != d || alpha.size() != 1) throw ShapeMismatch("relation_aggregate: width mismatch");
  if (src.size() != dst.size() || src.size() != pair.size()) throw ShapeMismatch("relation_aggregate: edge arrays");
  auto out = tensor::make_result<T>({n, d}, {&h, &alpha, &x});
  const T a = alpha.item();
  Buffer<double> acc(n * d, 0.0);
  for (std::size_t e = 0; e < src.size(); ++e) {
    const T* hs = h.data() + src[e] * d;
    const T* xr = x.data() + pair[e] * d;
    double* o = acc.data() + dst[e] * d;
    for (std::size_t j = 0; j < d; ++j) o[j] += static_cast<double>((a * hs[j] + (T(1) - a) * p1[j]) * xr[j]);
  }
  std::transform(acc.begin(), acc.end(), out.data(), [](double v) { return static_cast<T>(v); });

  auto nh = h.node_ptr();
  auto na = alpha.node_ptr();
  auto nx = x.node_ptr();
  std::vector<T> p(p1.begin(), p1.end());
  std::vector<std::uint32_t> s(src.begin(), src.end()), t(dst.begin(), dst.end()), q(pair.begin(), pair.end());
  tensor::attach_backward<T>(out, [nh, na, nx, p = std::move(p), s = std::move(s), t = std::move(t),
                                   q = std::move(q), d](Node<T>& o) {
    const T a = na->value[0];
    T* gh = nh->requires_grad ? nh->grad_data() : nullptr;
    T* gx = nx->requires_grad ? nx->grad_data() : nullptr;
    T galpha = 0;
    for (std::size_t e = 0; e < s.size(); ++e) {
      const T* g = o.grad.data() + t[e] * d;
      const T* hs = nh->value.data() + s[e] * d;
      const T* xr = nx->value.data() + q[e] * d;
      for (std::size_t j = 0; j < d; ++j) {
        const T z = a * hs[j] + (T(1) - a) * p[j];
        const T dz = g[j] * xr[j];
        if (gx) gx[q[e] * d + j] += g[j] * z;
        if (gh) gh[s[e] * d + j] += a * dz;
        galpha += dz * (hs[j] - p[j]);
      }
    }
    if (na->requires_grad) na->grad_data()[0] += galpha;
  });
  return out;
}

template <typename T>
Tensor<T> hyperedge_aggregate(const Tensor<T>& h, const Tensor<T>& alpha, const Tensor<T>& positions,
                              const Tensor<T>& rel_msg, std::span<const std::uint32_t> offsets,
                              std::span<const std::uint32_t> entities, std::span<const std::uint32_t> relations,
                              std::size_t excluded_edge) {
  const std::size_t d = h.cols();
  const std::size_t n = h.rows();
  const std::size_t num_edges = relations.size();
  if (rel_msg.cols() != d || positions.cols() != d || alpha.size() != 1) {
    throw ShapeMismatch("hyperedge_aggregate: width mismatch");
  }
  if (offsets.size() != num_edges + 1) throw ShapeMismatch("hyperedge_aggregate: offsets");
  std::size_t k_max = 0;
  for (std::size_t e = 0; e < num_edges; ++e) k_max = std::max<std::size_t>(k_max, offsets[e + 1] - offsets[e]);
  if (k_max > positions.rows()) throw ShapeMismatch("hyperedge_aggregate: positional table too short");

  auto out = tensor::make_result<T>({n, d}, {&h, &alpha, &rel_msg, &positions});
  const T a = alpha.item();
  Buffer<double> acc(n * d, 0.0);
  // z_j, prefix products pre[j] = prod_{l<j} z_l and suffix products suf[j] = prod_{l>=j} z_l.
  Buffer<T> z(k_max * d), pre((k_max + 1) * d), suf((k_max + 1) * d);

  auto load_edge = [&](const T* hv, const T* pv, std::size_t e, std::size_t k, T alpha_v) {
    const std::uint32_t* ents = entities.data() + offsets[e];
    for (std::size_t j = 0; j < k; ++j) {
      const T* hr = hv + ents[j] * d;
      const T* pr = pv + j * d;
      for (std::size_t c = 0; c < d; ++c) z[j * d + c] = alpha_v * hr[c] + (T(1) - alpha_v) * pr[c];
    }
    std::fill(pre.begin(), pre.begin() + d, T(1));
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) pre[(j + 1) * d + c] = pre[j * d + c] * z[j * d + c];
    std::fill(suf.begin() + k * d, suf.begin() + (k + 1) * d, T(1));
    for (std::size_t j = k; j-- > 0;)
      for (std::size_t c = 0; c < d; ++c) suf[j * d + c] = suf[(j + 1) * d + c] * z[j * d + c];
  };

  for (std::size_t e = 0; e < num_edges; ++e) {
    if (e == excluded_edge) continue;
    const std::size_t k = offsets[e + 1] - offsets[e];
    load_edge(h.data(), positions.data(), e, k, a);
    const T* r = rel_msg.data() + relations[e] * d;
    const std::uint32_t* ents = entities.data() + offsets[e];
    for (std::size_t i = 0; i < k; ++i) {
      double* o = acc.data() + ents[i] * d;
      const T* lp = pre.data() + i * d;
      const T* rp = suf.data() + (i + 1) * d;
      for (std::size_t c = 0; c < d; ++c) o[c] += static_cast<double>(lp[c] * rp[c] * r[c]);
    }
  }
  std::transform(acc.begin(), acc.end(), out.data(), [](double v) { return static_cast<T>(v); });

  if (!out.requires_grad()) return out;
  auto nh = h.node_ptr();
  auto na = alpha.node_ptr();
  auto nr = rel_msg.node_ptr();
  auto np = positions.node_ptr();
  std::vector<std::uint32_t> off(offsets.begin(), offsets.end());
  std::vector<std::uint32_t> ents_copy(entities.begin(), entities.end());
  std::vector<std::uint32_t> rels(relations.begin(), relations.end());
  tensor::attach_backward<T>(out, [=, off = std::move(off), ents_copy = std::move(ents_copy),
                                   rels = std::move(rels)](Node<T>& o) {
    const T a = na->value[0];
    T* gh = nh->requires_grad ? nh->grad_data() : nullptr;
    T* gr = nr->requires_grad ? nr->grad_data() : nullptr;
    T* gp = np->requires_grad ? np->grad_data() : nullptr;
    const T* hv = nh->value.data();
    const T* pv = np->value.data();
    Buffer<T> z(k_max * d), pre((k_max + 1) * d), suf((k_max + 1) * d), right((k_max + 1) * d), left(d), dz(d);
    T galpha = 0;
    for (std::size_t e = 0; e + 1 < off.size(); ++e) {
      if (e == excluded_edge) continue;
      const std::size_t k = off[e + 1] - off[e];
      const std::uint32_t* ents = ents_copy.data() + off[e];
      for (std::size_t j = 0; j < k; ++j) {
        const T* hr = hv + ents[j] * d;
        const T* pr = pv + j * d;
        for (std::size_t c = 0; c < d; ++c) z[j * d + c] = a * hr[c] + (T(1) - a) * pr[c];
      }
      std::fill(pre.begin(), pre.begin() + d, T(1));
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < d; ++c) pre[(j + 1) * d + c] = pre[j * d + c] * z[j * d + c];
      std::fill(suf.begin() + k * d, suf.begin() + (k + 1) * d, T(1));
      for (std::size_t j = k; j-- > 0;)
        for (std::size_t c = 0; c < d; ++c) suf[j * d + c] = suf[(j + 1) * d + c] * z[j * d + c];

      const T* r = nr->value.data() + rels[e] * d;
      if (gr) {
        T* grow = gr + rels[e] * d;
        for (std::size_t i = 0; i < k; ++i) {
          const T* g = o.grad.data() + ents[i] * d;
          for (std::size_t c = 0; c < d; ++c) grow[c] += g[c] * pre[i * d + c] * suf[(i + 1) * d + c];
        }
      }
      if (k < 2) continue;  // an arity-1 message does not depend on z
      // dz_j = r * sum_{i != j} g_i * prod_{l not in {i, j}} z_l
      for (std::size_t j = 0; j < k; ++j) {
        // right[i] = prod_{l > i, l != j} z_l
        std::fill(right.begin() + k * d, right.begin() + (k + 1) * d, T(1));
        for (std::size_t i = k; i-- > 0;) {
          for (std::size_t c = 0; c < d; ++c) {
            const T next = right[(i + 1) * d + c];
            right[i * d + c] = (i + 1 < k && i + 1 != j) ? next * z[(i + 1) * d + c] : next;
          }
        }
        std::fill(left.begin(), left.end(), T(1));
        std::fill(dz.begin(), dz.end(), T(0));
        for (std::size_t i = 0; i < k; ++i) {
          if (i != j) {
            const T* g = o.grad.data() + ents[i] * d;
            for (std::size_t c = 0; c < d; ++c) dz[c] += g[c] * left[c] * right[i * d + c];
            for (std::size_t c = 0; c < d; ++c) left[c] *= z[i * d + c];
          }
        }
        const T* hr = hv + ents[j] * d;
        const T* pr = pv + j * d;
        for (std::size_t c = 0; c < d; ++c) {
          const T dzc = dz[c] * r[c];
          if (gh) gh[ents[j] * d + c] += a * dzc;
          if (gp) gp[j * d + c] += (T(1) - a) * dzc;
          galpha += dzc * (hr[c] - pr[c]);
        }
      }
    }
    if (na->requires_grad) na->grad_data()[0] += galpha;
  });
  return out;
}

// ----- encoder stages -------------------------------------------------------------------

template <typename T>
Tensor<T> rel_init(std::size_t num_relations, RelationId q, std::size_t dim) {
  if (q.index >= num_relations) throw UnknownRelation("query relation " + std::to_string(q.index) + " not in graph");
  auto h = Tensor<T>::zeros({num_relations, dim});
  std::fill(h.data() + q.index * dim, h.data() + (q.index + 1) * dim, T(1));
  return h;
}

template <typename T>
Tensor<T> node_update(const Tensor<T>& h, const Tensor<T>& agg, const LayerParams<T>& layer) {
  auto mixed = layer.update.forward(tensor::concat_cols(h, agg));
  auto normed = tensor::layernorm(mixed, layer.ln_gain, layer.ln_bias);
  return tensor::relu(tensor::add(normed, h));
}

template <typename T>
Tensor<T> rel_layer(const Tensor<T>& h, const GraphContext<T>& ctx, const Tensor<T>& x, const LayerParams<T>& layer) {
  const std::size_t d = h.cols();
  std::span<const T> p1(ctx.positions().data(), d);
  auto agg = relation_aggregate(h, layer.alpha, p1, x, ctx.rel_src(), ctx.rel_dst(), ctx.rel_pair());
  return node_update(h, agg, layer);
}

template <typename T>
Tensor<T> rel_forward(const GraphContext<T>& ctx, RelationId q, const ModelParams<T>& params, const ModelConfig& cfg,
                      ForwardTrace* trace) {
  auto h = rel_init<T>(ctx.graph().num_relations(), q, cfg.dim);
  if (params.relation_layers.empty()) return h;
  Tensor<T> x;
  if (ctx.pairs().empty()) {
    x = Tensor<T>::zeros({0, cfg.dim});
  } else {
    x = posenc::enc_pi<T>(ctx.pairs(), params.enc_pi, cfg.posenc());
  }
  if (trace) trace->enc_pi_pairs.insert(ctx.pairs().begin(), ctx.pairs().end());
  for (const auto& layer : params.relation_layers) h = rel_layer(h, ctx, x, layer);
  return h;
}

template <typename T>
Tensor<T> ent_init(std::size_t num_entities, const Query& query, const Tensor<T>& rel_embeddings,
                   const Tensor<T>& positions) {
  const std::size_t d = rel_embeddings.cols();
  const std::size_t m = query.observed.size();
  if (query.relation.index >= rel_embeddings.rows()) throw UnknownRelation("query relation outside embeddings");
  std::vector<std::uint32_t> rows(m, query.relation.index);
  std::vector<std::uint32_t> ids(m);
  std::vector<T> pos(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& pe = query.observed[i];
    if (pe.entity.index >= num_entities) throw UnknownEntity("query entity outside graph");
    if (pe.position < 1 || pe.position > positions.rows()) throw PositionOutOfRange("query position");
    ids[i] = pe.entity.index;
    std::copy(positions.data() + (pe.position - 1) * d, positions.data() + pe.position * d, pos.begin() + i * d);
  }
  auto hq = tensor::index_select(rel_embeddings, rows);
  auto seeded = tensor::add(hq, Tensor<T>::from({m, d}, std::move(pos)));
  return tensor::segment_sum(seeded, ids, num_entities);
}

template <typename T>
Tensor<T> ent_layer(const Tensor<T>& h, const GraphContext<T>& ctx, const Tensor<T>& rel_embeddings,
                    const EntityLayerParams<T>& layer, std::size_t excluded_edge) {
  auto rel_msg = layer.relation_transform.forward(rel_embeddings);
  auto agg = hyperedge_aggregate(h, layer.alpha, ctx.positions(), rel_msg, ctx.edge_offsets(), ctx.edge_entities(),
                                 ctx.edge_relations(), excluded_edge);
  return node_update<T>(h, agg, layer);
}

template <typename T>
Tensor<T> encode_entities(const GraphContext<T>& ctx, const Query& query, const Tensor<T>& rel_embeddings,
                          const ModelParams<T>& params, const ForwardOptions& options) {
  auto h = ent_init(ctx.graph().num_entities(), query, rel_embeddings, ctx.positions());
  if (options.trace && options.excluded_edge != kNoEdge && !params.entity_layers.empty()) {
    options.trace->skipped_edges.push_back(options.excluded_edge);
  }
  for (const auto& layer : params.entity_layers) h = ent_layer(h, ctx, rel_embeddings, layer, options.excluded_edge);
  return h;
}

template <typename T>
Tensor<T> decode_rows(const Tensor<T>& entity_embeddings, std::span<const std::uint32_t> rows,
                      const ModelParams<T>& params) {
  auto selected = tensor::index_select(entity_embeddings, rows);
  auto logits = params.decoder.forward(selected);
  return tensor::reshape(logits, {rows.size()});
}

void check_query(const KnowledgeHypergraph& graph, const Query& query) {
  if (query.relation.index >= graph.num_relations()) {
    throw UnknownRelation("query relation index " + std::to_string(query.relation.index) + " not in graph");
  }
  const std::size_t k = graph.arity(query.relation);
  if (query.masked_position < 1 || query.masked_position > k) {
    throw PositionOutOfRange("masked position " + std::to_string(query.masked_position) + " outside 1.." +
                             std::to_string(k));
  }
  if (query.observed.size() + 1 != k) throw PositionOutOfRange("query does not cover the relation's arity");
  std::vector<char> seen(k + 1, 0);
  seen[query.masked_position] = 1;
  for (const auto& pe : query.observed) {
    if (pe.position < 1 || pe.position > k || seen[pe.position]) {
      throw PositionOutOfRange("observed positions must cover 1..k except the masked one");
    }
    seen[pe.position] = 1;
    if (pe.entity.index >= graph.num_entities()) throw UnknownEntity("query entity not in graph");
  }
}

namespace {

template <typename T>
std::vector<T> probabilities(const GraphContext<T>& ctx, const Query& query, const Tensor<T>& rel_embeddings,
                             const ModelParams<T>& params, const ForwardOptions& options) {
  auto h = encode_entities(ctx, query, rel_embeddings, params, options);
  std::vector<std::uint32_t> all(ctx.graph().num_entities());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<std::uint32_t>(v);
  auto p = tensor::sigmoid(decode_rows(h, all, params));
  return {p.values().begin(), p.values().end()};
}

}  // namespace

template <typename T>
std::vector<T> score_query(const GraphContext<T>& ctx, const Query& query, const ModelParams<T>& params,
                           const ModelConfig& cfg, const ForwardOptions& options) {
  check_query(ctx.graph(), query);
  auto rel = rel_forward(ctx, query.relation, params, cfg, options.trace);
  return probabilities(ctx, query, rel, params, options);
}

template <typename T>
std::vector<std::vector<T>> score_batch(const GraphContext<T>& ctx, std::span<const Query> queries,
                                        const ModelParams<T>& params, const ModelConfig& cfg) {
  std::map<std::uint32_t, Tensor<T>> cache;
  std::vector<std::vector<T>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    check_query(ctx.graph(), q);
    auto it = cache.find(q.relation.index);
    if (it == cache.end()) it = cache.emplace(q.relation.index, rel_forward(ctx, q.relation, params, cfg)).first;
    out.push_back(probabilities(ctx, q, it->second, params, ForwardOptions{}));
  }
  return out;
}

// ----- instantiations -------------------------------------------------------------------

#define HYPER_INSTANTIATE(T)                                                                                        \
  template struct Mlp2<T>;                                                                                          \
  template struct ModelParams<T>;                                                                                   \
  template class GraphContext<T>;                                                                                   \
  template tensor::Checkpoint to_checkpoint<T>(const ModelConfig&, const ModelParams<T>&, const std::string&);     \
  template ModelParams<T> params_from_checkpoint<T>(const tensor::Checkpoint&, const ModelConfig&);                \
  template Tensor<T> relation_aggregate<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>, const Tensor<T>&, \
                                           std::span<const std::uint32_t>, std::span<const std::uint32_t>,         \
                                           std::span<const std::uint32_t>);                                        \
  template Tensor<T> hyperedge_aggregate<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                            std::span<const std::uint32_t>, std::span<const std::uint32_t>,        \
                                            std::span<const std::uint32_t>, std::size_t);                          \
  template Tensor<T> rel_init<T>(std::size_t, RelationId, std::size_t);                                            \
  template Tensor<T> node_update<T>(const Tensor<T>&, const Tensor<T>&, const LayerParams<T>&);                    \
  template Tensor<T> rel_layer<T>(const Tensor<T>&, const GraphContext<T>&, const Tensor<T>&,                      \
                                  const LayerParams<T>&);                                                          \
  template Tensor<T> rel_forward<T>(const GraphContext<T>&, RelationId, const ModelParams<T>&, const ModelConfig&, \
                                    ForwardTrace*);                                                                \
  template Tensor<T> ent_init<T>(std::size_t, const Query&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> ent_layer<T>(const Tensor<T>&, const GraphContext<T>&, const Tensor<T>&,                      \
                                  const EntityLayerParams<T>&, std::size_t);                                       \
  template Tensor<T> encode_entities<T>(const GraphContext<T>&, const Query&, const Tensor<T>&,                    \
                                        const ModelParams<T>&, const ForwardOptions&);                             \
  template Tensor<T> decode_rows<T>(const Tensor<T>&, std::span<const std::uint32_t>, const ModelParams<T>&);      \
  template std::vector<T> score_query<T>(const GraphContext<T>&, const Query&, const ModelParams<T>&,              \
                                         const ModelConfig&, const ForwardOptions&);                               \
  template std::vector<std::vector<T>> score_batch<T>(const GraphContext<T>&, std::span<const Query>,              \
                                                      const ModelParams<T>&, const ModelConfig&);

HYPER_INSTANTIATE(float)
HYPER_INSTANTIATE(double)

#undef HYPER_INSTANTIATE

}  // namespace hyper::model
