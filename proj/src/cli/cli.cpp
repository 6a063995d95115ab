#include "hyper/cli/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyper/data/datasets.hpp"
#include "hyper/eval/evaluate.hpp"
#include "hyper/relgraph/relation_graph.hpp"
#include "hyper/tensor/checkpoint.hpp"

namespace hyper::cli {

namespace fs = std::filesystem;

// ----- run configuration ------------------------------------------------------------

const std::vector<KeySpec>& RunConfig::keys() {
  static const std::vector<KeySpec> specs = {
      // model
      {"dim", "64", "hidden dimension d"},
      {"rel_layers", "6", "relation-encoder layers T"},
      {"ent_layers", "6", "entity-encoder layers L"},
      {"pos_encoding", "sinusoidal", "sinusoidal | all-one | random | magnitude"},
      {"pos_seed", "0", "seed of the random positional encoding"},
      {"relgraph_mode", "exclude-same-edge", "exclude-same-edge | raw-spmm"},
      // training
      {"negatives", "256", "negatives per query"},
      {"adv_temperature", "1", "self-adversarial temperature"},
      {"batch_size", "8", "queries per optimisation step"},
      {"lr", "0.0005", "AdamW learning rate"},
      {"weight_decay", "0.01", "AdamW decoupled weight decay"},
      {"epochs", "10", "training epochs"},
      {"batches_per_epoch", "0", "steps per epoch (0: facts / batch size)"},
      {"steps", "30000", "pretraining steps"},
      {"val_every", "500", "pretraining validation interval in steps"},
      {"val_max_facts", "0", "cap on validation facts per graph (0: all)"},
      {"strict_negatives", "true", "reject negatives that form known facts"},
      {"target_val_mrr", "", "stop once validation MRR reaches this value"},
      {"patience", "0", "stop after this many validations without improvement (0: never)"},
      // general
      {"seed", "0", "seed for every random choice"},
      {"threads", "1", "worker threads"},
      // files
      {"facts", "", "input fact file"},
      {"graph", "", "graph fact file used for message passing"},
      {"graphs", "", "comma-separated fact files (pretraining mix)"},
      {"valid", "", "validation fact file"},
      {"test", "", "test fact file"},
      {"filter", "", "comma-separated extra fact files for filtered ranking"},
      {"ckpt", "", "checkpoint file"},
      {"out", "", "output file or directory"},
      {"log", "", "training log (TSV)"},
      // datasets
      {"n_train", "", "entities sampled for the training graph"},
      {"n_test", "", "entities sampled for the inference graph"},
      {"p_rel", "", "fraction of relations reserved for inference"},
      {"p_tri", "", "target fraction of inference facts with unseen relations"},
      {"scheme", "pos", "reification scheme: pos | relnode"},
      {"inverse", "false", "undo a reification"},
      {"relation", "", "relation name"},
      {"fraction", "0.5", "fraction of the relation's facts to corrupt"},
      {"kind", "corpus", "synthetic data: corpus | random"},
      {"clusters", "20", "clusters of the synthetic corpus"},
      {"cities", "5", "cities of the synthetic corpus"},
      {"entities", "1000", "entities of a random hypergraph"},
      {"relations", "12", "relations of a random hypergraph"},
      {"num_facts", "2000", "facts of a random hypergraph"},
  };
  return specs;
}

bool RunConfig::known(std::string_view key) {
  for (const auto& s : keys()) {
    if (s.key == key) return true;
  }
  return false;
}

RunConfig RunConfig::defaults(std::string_view command) {
  RunConfig c;
  for (const auto& s : keys()) c.values_[s.key] = s.default_value;
  if (command == "pretrain") {
    c.values_["negatives"] = "512";
    c.values_["batch_size"] = "32";
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw UsageError("unknown configuration key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
  return it->second;
}

void RunConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + " lacks '='");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw UsageError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const auto x = std::stoull(v, &used);
    if (used != v.size() || v.starts_with('-')) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("'" + key + "' expects a number, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("'" + key + "' expects true or false, got '" + v + "'");
}

model::ModelConfig RunConfig::model() const {
  model::ModelConfig m;
  m.dim = get_size("dim");
  m.rel_layers = get_size("rel_layers");
  m.ent_layers = get_size("ent_layers");
  try {
    m.pos_kind = posenc::parse_kind(get("pos_encoding"));
    m.rel_mode = relgraph::parse_mode(get("relgraph_mode"));
    m.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  m.pos_seed = get_u64("pos_seed");
  return m;
}

train::TrainConfig RunConfig::training() const {
  train::TrainConfig t;
  t.negatives = get_size("negatives");
  t.adv_temperature = get_double("adv_temperature");
  t.batch_size = get_size("batch_size");
  t.lr = get_double("lr");
  t.weight_decay = get_double("weight_decay");
  t.epochs = get_size("epochs");
  t.batches_per_epoch = get_size("batches_per_epoch");
  t.steps = get_size("steps");
  t.val_every = get_size("val_every");
  t.val_max_facts = get_size("val_max_facts");
  t.strict_negatives = get_bool("strict_negatives");
  t.seed = get_u64("seed");
  t.threads = get_size("threads");
  if (!empty("target_val_mrr")) t.target_val_mrr = get_double("target_val_mrr");
  t.patience = get_size("patience");
  try {
    t.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return t;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& s : keys()) out += s.key + "=" + get(s.key) + "\n";
  return out;
}

// ----- helpers ------------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require(const RunConfig& cfg, const std::string& key) {
  if (cfg.empty(key)) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    throw UsageError("--" + flag + " is required");
  }
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("input file '" + path + "' does not exist");
}

void require_output(const std::string& path) {
  const auto parent = fs::absolute(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

void write_manifest(const std::string& path, const std::string& command, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = std::string(kVersion);
  j["seed"] = cfg.get("seed");
  j["compiler"] = __VERSION__;
  nlohmann::ordered_json c;
  for (const auto& s : RunConfig::keys()) c[s.key] = cfg.get(s.key);
  j["config"] = c;
  write_text_file(path, j.dump(2) + "\n");
}

std::string manifest_for(const std::string& out) {
  if (fs::is_directory(out)) return (fs::path(out) / "manifest.json").string();
  return out + ".manifest.json";
}

/// Graph file plus extra fact files sharing its vocabulary; entities that only
/// occur in the extra files become isolated nodes of the graph.
struct LoadedGraph {
  KnowledgeHypergraph graph;
  std::vector<std::vector<Hyperedge>> extra;
};

LoadedGraph load_graph(const std::string& graph_path, const std::vector<std::string>& extra_paths) {
  GraphBuilder builder;
  for (const auto& e : parse_facts_into(builder, read_text_file(graph_path))) builder.add_edge(e);
  LoadedGraph out;
  for (const auto& p : extra_paths) out.extra.push_back(parse_facts_into(builder, read_text_file(p)));
  out.graph = std::move(builder).build();
  return out;
}

void save_model(const std::string& path, const model::ModelConfig& mc, const model::ModelParams<float>& params,
                const RunConfig& cfg) {
  tensor::save_checkpoint(path, model::to_checkpoint(mc, params, "# run\n" + cfg.to_text()));
}

// ----- subcommands -----------------------------------------------------------------------

int run_stats(const RunConfig& cfg, std::ostream& out) {
  require(cfg, "facts");
  require_file(cfg.get("facts"));
  out << data::to_text(data::stats(read_fact_file(cfg.get("facts"), {true})));
  return 0;
}

int run_relgraph(const RunConfig& cfg, std::ostream& out) {
  require(cfg, "facts");
  require_file(cfg.get("facts"));
  const auto mode = cfg.model().rel_mode;
  if (!cfg.empty("out")) require_output(cfg.get("out"));
  const auto graph = read_fact_file(cfg.get("facts"), {true});
  const auto rg = relgraph::build_relation_graph(graph, mode);
  const auto tsv = relgraph::to_tsv(graph, rg);
  if (cfg.empty("out")) {
    out << tsv;
  } else {
    write_text_file(cfg.get("out"), tsv);
    write_manifest(manifest_for(cfg.get("out")), "relgraph build", cfg);
    out << "relation graph: " << rg.num_relations << " relations, " << rg.edges.size() << " edges\n";
  }
  return 0;
}

int run_split(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"facts", "n_train", "n_test", "p_rel", "p_tri", "out"}) require(cfg, k);
  require_file(cfg.get("facts"));
  data::SplitParams p;
  p.n_train = cfg.get_size("n_train");
  p.n_test = cfg.get_size("n_test");
  p.p_rel = cfg.get_double("p_rel");
  p.p_tri = cfg.get_double("p_tri");
  p.seed = cfg.get_u64("seed");
  try {
    p.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = cfg.get("out");
  require_output(dir.string());
  const auto source = read_fact_file(cfg.get("facts"));
  const auto split = data::generate_split(source, p);
  fs::create_directories(dir);
  write_text_file((dir / "train.txt").string(), serialize_facts(split.train));
  write_text_file((dir / "inference.txt").string(), serialize_facts(split.inference, split.aux));
  write_text_file((dir / "valid.txt").string(), serialize_facts(split.inference, split.valid));
  write_text_file((dir / "test.txt").string(), serialize_facts(split.inference, split.test));
  nlohmann::ordered_json j;
  j["train_facts"] = split.train.num_edges();
  j["train_entities"] = split.train.num_entities();
  j["train_relations"] = split.train.num_relations();
  j["inference_facts"] = split.inference.num_edges();
  j["inference_entities"] = split.inference.num_entities();
  j["inference_relations"] = split.inference.num_relations();
  j["aux_facts"] = split.aux.size();
  j["valid_facts"] = split.valid.size();
  j["test_facts"] = split.test.size();
  j["unseen_relations"] = split.unseen_relations;
  j["unseen_fraction"] = split.unseen_fraction;
  j["dropped_no_evidence"] = split.dropped_no_evidence;
  write_text_file((dir / "split.json").string(), j.dump(2) + "\n");
  write_manifest((dir / "manifest.json").string(), "split generate", cfg);
  out << j.dump(2) << "\n";
  return 0;
}

int run_reify(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"facts", "out"}) require(cfg, k);
  require_file(cfg.get("facts"));
  require_output(cfg.get("out"));
  const auto& scheme = cfg.get("scheme");
  if (scheme != "pos" && scheme != "relnode") throw UsageError("--scheme must be pos or relnode");
  const bool inverse = cfg.get_bool("inverse");
  const auto graph = read_fact_file(cfg.get("facts"), {inverse});
  KnowledgeHypergraph result;
  if (scheme == "pos") result = inverse ? data::unreify_positional(graph) : data::reify_positional(graph);
  else result = inverse ? data::unreify_relnode(graph) : data::reify_relnode(graph);
  write_text_file(cfg.get("out"), serialize_facts(result));
  write_manifest(manifest_for(cfg.get("out")), "reify", cfg);
  out << result.num_edges() << " facts written to " << cfg.get("out") << "\n";
  return 0;
}

int run_corrupt(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"facts", "relation", "out"}) require(cfg, k);
  require_file(cfg.get("facts"));
  require_output(cfg.get("out"));
  const double fraction = cfg.get_double("fraction");
  if (fraction < 0 || fraction > 1) throw UsageError("--fraction must lie in [0, 1]");
  const auto graph = read_fact_file(cfg.get("facts"));
  tensor::Rng rng(cfg.get_u64("seed"));
  const auto result = data::corrupt_positions(graph, graph.relation(cfg.get("relation")), fraction, rng);
  write_text_file(cfg.get("out"), serialize_facts(result));
  write_manifest(manifest_for(cfg.get("out")), "corrupt", cfg);
  out << result.num_edges() << " facts written to " << cfg.get("out") << "\n";
  return 0;
}

int run_synth(const RunConfig& cfg, std::ostream& out) {
  require(cfg, "out");
  require_output(cfg.get("out"));
  KnowledgeHypergraph graph;
  if (cfg.get("kind") == "corpus") {
    graph = data::synthetic_corpus({cfg.get_size("clusters"), cfg.get_size("cities"), cfg.get_u64("seed")});
  } else if (cfg.get("kind") == "random") {
    data::RandomGraphParams p;
    p.entities = cfg.get_size("entities");
    p.relations = cfg.get_size("relations");
    p.facts = cfg.get_size("num_facts");
    p.seed = cfg.get_u64("seed");
    graph = data::random_hypergraph(p);
  } else {
    throw UsageError("--kind must be corpus or random");
  }
  write_text_file(cfg.get("out"), serialize_facts(graph));
  write_manifest(manifest_for(cfg.get("out")), "synth", cfg);
  out << graph.num_edges() << " facts written to " << cfg.get("out") << "\n";
  return 0;
}

void report_training(std::ostream& out, const train::TrainResult<float>& result) {
  out << "steps " << result.steps_run << ", best step " << result.best_step;
  if (result.best_val_mrr >= 0) out << ", best validation MRR " << result.best_val_mrr;
  out << "\n";
}

/// Validation over the graph's own context, filtered by every known fact.
train::Validation<float> make_validation(const model::GraphContext<float>& ctx, const LoadedGraph& loaded) {
  train::Validation<float> v;
  v.ctx = &ctx;
  if (!loaded.extra.empty()) v.facts = loaded.extra[0];
  v.filter = FactSet(loaded.graph.edges());
  for (const auto& facts : loaded.extra) v.filter.insert(facts);
  return v;
}

int run_train(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"graph", "out"}) require(cfg, k);
  std::vector<std::string> extra;
  require_file(cfg.get("graph"));
  for (const char* k : {"valid", "test"}) {
    if (!cfg.empty(k)) {
      require_file(cfg.get(k));
      extra.push_back(cfg.get(k));
    }
  }
  require_output(cfg.get("out"));
  const auto mc = cfg.model();
  const auto tc = cfg.training();
  const auto loaded = load_graph(cfg.get("graph"), extra);
  model::GraphContext<float> ctx(loaded.graph, mc);
  train::Validation<float> validation;
  if (!cfg.empty("valid")) validation = make_validation(ctx, loaded);
  train::TrainLog log(cfg.get("log"));
  const auto params = model::ModelParams<float>::init(mc, tc.seed);
  const auto result = train::train(ctx, validation, params, mc, tc, &log);
  save_model(cfg.get("out"), mc, result.best, cfg);
  write_manifest(manifest_for(cfg.get("out")), "train", cfg);
  report_training(out, result);
  return 0;
}

int run_pretrain(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"graphs", "out"}) require(cfg, k);
  const auto paths = split_list(cfg.get("graphs"));
  for (const auto& p : paths) require_file(p);
  require_output(cfg.get("out"));
  const auto mc = cfg.model();
  const auto tc = cfg.training();
  std::vector<KnowledgeHypergraph> graphs;
  graphs.reserve(paths.size());
  train::PretrainMix mix;
  for (const auto& p : paths) graphs.push_back(read_fact_file(p));
  for (std::size_t i = 0; i < paths.size(); ++i) mix.members.push_back({&graphs[i], paths[i]});
  train::TrainLog log(cfg.get("log"));
  const auto result = train::pretrain<float>(mix, mc, tc, &log);
  save_model(cfg.get("out"), mc, result.best, cfg);
  write_manifest(manifest_for(cfg.get("out")), "pretrain", cfg);
  report_training(out, result);
  return 0;
}

/// Model configuration of a checkpoint, with any model keys given explicitly
/// applied on top (a mismatch is then reported by finetune).
model::ModelConfig checkpoint_model(const tensor::Checkpoint& ck, const RunConfig& cfg,
                                    const std::vector<std::string>& explicit_keys) {
  auto stored = model::config_from_checkpoint(ck);
  RunConfig merged = cfg;
  merged.set("dim", std::to_string(stored.dim));
  merged.set("rel_layers", std::to_string(stored.rel_layers));
  merged.set("ent_layers", std::to_string(stored.ent_layers));
  merged.set("pos_encoding", std::string(posenc::to_string(stored.pos_kind)));
  merged.set("pos_seed", std::to_string(stored.pos_seed));
  merged.set("relgraph_mode", std::string(relgraph::to_string(stored.rel_mode)));
  for (const auto& k : explicit_keys) merged.set(k, cfg.get(k));
  return merged.model();
}

int run_finetune(const RunConfig& cfg, const std::vector<std::string>& explicit_keys, std::ostream& out) {
  for (const char* k : {"ckpt", "graph", "out"}) require(cfg, k);
  require_file(cfg.get("ckpt"));
  require_file(cfg.get("graph"));
  std::vector<std::string> extra;
  if (!cfg.empty("valid")) {
    require_file(cfg.get("valid"));
    extra.push_back(cfg.get("valid"));
  }
  require_output(cfg.get("out"));
  const auto ck = tensor::load_checkpoint(cfg.get("ckpt"));
  const auto mc = checkpoint_model(ck, cfg, explicit_keys);
  const auto tc = cfg.training();
  const auto loaded = load_graph(cfg.get("graph"), extra);
  model::GraphContext<float> ctx(loaded.graph, mc);
  train::Validation<float> validation;
  if (!extra.empty()) validation = make_validation(ctx, loaded);
  train::TrainLog log(cfg.get("log"));
  const auto result = train::finetune<float>(ck, ctx, validation, mc, tc, &log);
  save_model(cfg.get("out"), mc, result.best, cfg);
  write_manifest(manifest_for(cfg.get("out")), "finetune", cfg);
  report_training(out, result);
  return 0;
}

int run_eval(const RunConfig& cfg, std::ostream& out) {
  for (const char* k : {"graph", "test", "ckpt"}) require(cfg, k);
  require_file(cfg.get("ckpt"));
  require_file(cfg.get("graph"));
  require_file(cfg.get("test"));
  std::vector<std::string> extra{cfg.get("test")};
  for (const auto& p : split_list(cfg.get("filter"))) {
    require_file(p);
    extra.push_back(p);
  }
  if (!cfg.empty("out")) require_output(cfg.get("out"));
  const auto ck = tensor::load_checkpoint(cfg.get("ckpt"));
  const auto mc = model::config_from_checkpoint(ck);
  const auto params = model::params_from_checkpoint<float>(ck, mc);
  const auto loaded = load_graph(cfg.get("graph"), extra);
  FactSet filter(loaded.graph.edges());
  for (const auto& facts : loaded.extra) filter.insert(facts);
  model::GraphContext<float> ctx(loaded.graph, mc);
  const auto report = eval::evaluate_model(ctx, loaded.extra[0], filter, params, mc, cfg.get_size("threads"));
  const auto json = eval::to_json(report);
  if (cfg.empty("out")) {
    out << json;
  } else {
    write_text_file(cfg.get("out"), json);
    write_manifest(manifest_for(cfg.get("out")), "eval", cfg);
    out << "MRR " << report.overall.mrr << " over " << report.overall.queries << " queries\n";
  }
  return 0;
}

const std::vector<std::string> kModelKeys = {"dim",      "rel_layers", "ent_layers",
                                             "pos_encoding", "pos_seed", "relgraph_mode"};
const std::vector<std::string> kTrainKeys = {"negatives",     "adv_temperature",  "batch_size", "lr",
                                             "weight_decay",  "epochs",           "batches_per_epoch",
                                             "steps",         "val_every",        "val_max_facts",
                                             "strict_negatives", "target_val_mrr", "patience"};

struct Command {
  std::string name;         ///< full name, e.g. "split generate"
  std::vector<std::string> keys;
};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

// ----- dispatch ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge hypergraph link prediction"};
  app.name("hyper");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  const std::vector<std::string> general = {"seed", "threads"};
  std::vector<std::pair<CLI::App*, Command>> commands;
  std::map<CLI::App*, std::map<std::string, std::string>> storage;
  std::map<CLI::App*, std::map<std::string, CLI::Option*>> options;
  std::map<CLI::App*, std::string> config_files;

  auto add = [&](CLI::App* sub, Command cmd) {
    auto& store = storage[sub];
    for (const auto& key : cmd.keys) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::string help;
      for (const auto& s : RunConfig::keys()) {
        if (s.key == key) help = s.help;
      }
      options[sub][key] = sub->add_option("--" + flag, store[key], help);
    }
    sub->add_option("--config", config_files[sub], "key=value configuration file");
    commands.emplace_back(sub, std::move(cmd));
  };

  auto* stats = app.add_subcommand("stats", "arity table and sizes of a fact file");
  add(stats, {"stats", {"facts"}});
  auto* relgraph = app.add_subcommand("relgraph", "relation graph tools");
  relgraph->require_subcommand(1);
  auto* build = relgraph->add_subcommand("build", "export the relation graph as TSV");
  add(build, {"relgraph build", {"facts", "relgraph_mode", "out"}});
  auto* split = app.add_subcommand("split", "inductive benchmark construction");
  split->require_subcommand(1);
  auto* generate = split->add_subcommand("generate", "generate a node- and relation-inductive split");
  add(generate, {"split generate", join({{"facts", "n_train", "n_test", "p_rel", "p_tri", "out"}, general})});
  auto* reify = app.add_subcommand("reify", "convert a hypergraph to a binary graph or back");
  add(reify, {"reify", {"facts", "scheme", "inverse", "out"}});
  auto* corrupt = app.add_subcommand("corrupt", "shuffle argument positions of one relation");
  add(corrupt, {"corrupt", join({{"facts", "relation", "fraction", "out"}, general})});
  auto* synth = app.add_subcommand("synth", "write a synthetic fact file");
  add(synth, {"synth",
              join({{"kind", "clusters", "cities", "entities", "relations", "num_facts", "out"}, general})});
  auto* trn = app.add_subcommand("train", "train a model on one graph");
  add(trn, {"train", join({{"graph", "valid", "test", "out", "log"}, kModelKeys, kTrainKeys, general})});
  auto* pre = app.add_subcommand("pretrain", "train on a mix of graphs");
  add(pre, {"pretrain", join({{"graphs", "out", "log"}, kModelKeys, kTrainKeys, general})});
  auto* fine = app.add_subcommand("finetune", "continue training a checkpoint");
  add(fine, {"finetune", join({{"ckpt", "graph", "valid", "out", "log"}, kModelKeys, kTrainKeys, general})});
  auto* ev = app.add_subcommand("eval", "filtered ranking evaluation");
  add(ev, {"eval", {"graph", "test", "ckpt", "filter", "out", "threads"}});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* failing = &app;
    for (auto& [sub, cmd] : commands) {
      if (sub->parsed()) failing = sub;
    }
    err << failing->help();
    return 2;
  }

  for (auto& [sub, cmd] : commands) {
    if (!sub->parsed()) continue;
    try {
      RunConfig cfg = RunConfig::defaults(cmd.name);
      if (!config_files[sub].empty()) {
        require_file(config_files[sub]);
        cfg.merge_text(read_text_file(config_files[sub]));
      }
      std::vector<std::string> explicit_keys;
      for (const auto& [key, opt] : options[sub]) {
        if (opt->count() > 0) {
          cfg.set(key, storage[sub][key]);
          explicit_keys.push_back(key);
        }
      }
      if (cmd.name == "stats") return run_stats(cfg, out);
      if (cmd.name == "relgraph build") return run_relgraph(cfg, out);
      if (cmd.name == "split generate") return run_split(cfg, out);
      if (cmd.name == "reify") return run_reify(cfg, out);
      if (cmd.name == "corrupt") return run_corrupt(cfg, out);
      if (cmd.name == "synth") return run_synth(cfg, out);
      if (cmd.name == "train") return run_train(cfg, out);
      if (cmd.name == "pretrain") return run_pretrain(cfg, out);
      if (cmd.name == "finetune") {
        std::vector<std::string> model_keys;
        for (const auto& k : explicit_keys) {
          if (std::find(kModelKeys.begin(), kModelKeys.end(), k) != kModelKeys.end()) model_keys.push_back(k);
        }
        return run_finetune(cfg, model_keys, out);
      }
      if (cmd.name == "eval") return run_eval(cfg, out);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n" << sub->help();
      return 2;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  err << app.help();
  return 2;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args, out, err);
}

}  // namespace hyper::cli
