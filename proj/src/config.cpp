#include "gssl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gssl/error.hpp"
#include "gssl/graph_io.hpp"
#include "gssl/text.hpp"

namespace gssl {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<RefineMode> parse_refine_mode(std::string_view s) {
  if (s == "enrich") return RefineMode::enrich;
  if (s == "clean") return RefineMode::clean;
  if (s == "combined") return RefineMode::combined;
  return std::nullopt;
}

namespace {

// Walks a JSON object, recording every problem instead of stopping at the first.
class Reader {
 public:
  Reader(std::vector<std::string>& errors, fs::path base) : errors_(errors), base_(std::move(base)) {}

  void error(const std::string& where, const std::string& msg) { errors_.push_back(where + ": " + msg); }

  bool object(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
      error(where, "expected an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || a == k;
      if (!ok) error(where + "." + k, "unknown key");
    }
    return true;
  }

  template <typename T>
  void number(const json& j, const char* key, const std::string& where, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        error(where + "." + key, "expected a non-negative integer");
        return;
      }
    } else if (!v.is_number()) {
      error(where + "." + key, "expected a number");
      return;
    }
    out = v.get<T>();
  }

  void boolean(const json& j, const char* key, const std::string& where, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) {
      error(where + "." + key, "expected true or false");
      return;
    }
    out = j.at(key).get<bool>();
  }

  std::optional<std::string> string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_string()) {
      error(where + "." + key, "expected a string");
      return std::nullopt;
    }
    return j.at(key).get<std::string>();
  }

  void path(const json& j, const char* key, const std::string& where, fs::path& out) {
    if (auto s = string(j, key, where)) out = resolve(*s);
  }

  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_relative() && !base_.empty() ? base_ / p : p;
  }

  void sizes(const json& j, const char* key, const std::string& where, std::vector<std::size_t>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array()) {
      error(where + "." + key, "expected an array of positive integers");
      return;
    }
    std::vector<std::size_t> tmp;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() <= 0) {
        error(where + "." + key, "expected an array of positive integers");
        return;
      }
      tmp.push_back(e.get<std::size_t>());
    }
    out = std::move(tmp);
  }

 private:
  std::vector<std::string>& errors_;
  fs::path base_;
};

void read_graph(Reader& r, const json& j, const std::string& where, GraphPaths& g) {
  if (!r.object(j, where, {"name", "triples", "features", "index", "gold", "roles", "sentences",
                           "relation_features", "relation_index", "normalize"})) {
    return;
  }
  if (auto n = r.string(j, "name", where)) g.name = *n;
  r.path(j, "triples", where, g.triples);
  r.path(j, "features", where, g.features);
  r.path(j, "index", where, g.index);
  r.path(j, "gold", where, g.gold);
  r.path(j, "roles", where, g.roles);
  r.path(j, "sentences", where, g.sentences);
  r.path(j, "relation_features", where, g.relation_features);
  r.path(j, "relation_index", where, g.relation_index);
  r.boolean(j, "normalize", where, g.normalize);
  if (g.triples.empty()) r.error(where + ".triples", "required");
  if (g.features.empty()) r.error(where + ".features", "required");
  if (g.index.empty()) r.error(where + ".index", "required");
  if (g.gold.empty()) r.error(where + ".gold", "required");
}

void read_validator(Reader& r, const json& j, const std::string& where, ValidatorSpec& v) {
  if (!r.object(j, where, {"kind", "verdict_file", "strict", "stoplist", "endpoint", "timeout_ms", "batch_size",
                           "retries", "backoff_ms", "max_in_flight"})) {
    return;
  }
  if (auto k = r.string(j, "kind", where)) {
    if (auto kind = parse_validator_kind(*k)) {
      v.kind = *kind;
    } else {
      r.error(where + ".kind", "unknown validator '" + *k + "'");
    }
  }
  r.path(j, "verdict_file", where, v.verdict_file);
  r.boolean(j, "strict", where, v.strict);
  r.path(j, "stoplist", where, v.stoplist);
  if (auto e = r.string(j, "endpoint", where)) v.remote.endpoint = *e;
  if (j.contains("timeout_ms")) {
    if (!j.at("timeout_ms").is_number_integer() || j.at("timeout_ms").get<long long>() <= 0) {
      r.error(where + ".timeout_ms", "must be a positive integer");
    } else {
      v.remote.timeout_ms = j.at("timeout_ms").get<int>();
    }
  }
  r.number(j, "batch_size", where, v.remote.batch_size);
  r.number(j, "retries", where, v.remote.retries);
  r.number(j, "backoff_ms", where, v.remote.backoff_ms);
  r.number(j, "max_in_flight", where, v.remote.max_in_flight);
  if (v.remote.batch_size == 0) r.error(where + ".batch_size", "must be positive");
  if (v.kind == ValidatorKind::verdict_file && v.verdict_file.empty()) {
    r.error(where + ".verdict_file", "required for the verdict-file validator");
  }
}

void read_refinement(Reader& r, const json& j, const std::string& where, RefinementConfig& c) {
  if (!r.object(j, where, {"mode", "validator", "supplementary_features", "supplementary_index", "zero_init"})) return;
  if (auto m = r.string(j, "mode", where)) {
    if (auto mode = parse_refine_mode(*m)) {
      c.mode = *mode;
    } else {
      r.error(where + ".mode", "expected enrich, clean or combined");
    }
  }
  if (j.contains("validator")) read_validator(r, j.at("validator"), where + ".validator", c.validator);
  r.path(j, "supplementary_features", where, c.supplementary_features);
  r.path(j, "supplementary_index", where, c.supplementary_index);
  r.boolean(j, "zero_init", where, c.zero_init);
  if (c.supplementary_features.empty() != c.supplementary_index.empty()) {
    r.error(where, "supplementary_features and supplementary_index go together");
  }
}

bool in_unit(double v) { return v >= 0 && v <= 1; }

void read_model(Reader& r, const json& j, const std::string& where, ModelConfig& m) {
  if (!r.object(j, where, {"task", "encoder", "hidden", "num_bases", "dropout", "decoder", "augment",
                           "inter_view_only", "exclude_type_negatives"})) {
    return;
  }
  bool task_ok = true;
  if (auto t = r.string(j, "task", where)) {
    if (auto task = parse_task(*t)) {
      m.task = *task;
    } else {
      r.error(where + ".task", "unknown task '" + *t + "'");
      task_ok = false;
    }
  } else {
    r.error(where + ".task", "required");
    task_ok = false;
  }
  if (auto e = r.string(j, "encoder", where)) {
    if (auto enc = parse_encoder_family(*e)) {
      m.encoder = *enc;
    } else {
      r.error(where + ".encoder", "unknown encoder '" + *e + "'");
    }
  } else {
    r.error(where + ".encoder", "required");
  }
  r.sizes(j, "hidden", where, m.hidden);
  if (m.hidden.size() != 2) r.error(where + ".hidden", "exactly two hidden layer widths are required");
  r.number(j, "num_bases", where, m.num_bases);
  if (m.num_bases == 0) r.error(where + ".num_bases", "must be at least 1");
  r.number(j, "dropout", where, m.dropout);
  if (m.dropout < 0 || m.dropout >= 1) r.error(where + ".dropout", "must be in [0,1)");
  r.boolean(j, "inter_view_only", where, m.inter_view_only);
  r.boolean(j, "exclude_type_negatives", where, m.exclude_type_negatives);

  m.decoder = DecoderSpec{};
  m.decoder.kind = default_decoder(m.task);
  if (j.contains("decoder")) {
    const auto& d = j.at("decoder");
    const std::string dw = where + ".decoder";
    if (d.is_string()) {
      if (auto k = parse_decoder_kind(d.get<std::string>())) {
        m.decoder.kind = *k;
      } else {
        r.error(dw, "unknown decoder '" + d.get<std::string>() + "'");
      }
    } else if (r.object(d, dw, {"kind", "aggregator", "hidden", "tau", "num_bases"})) {
      if (auto k = r.string(d, "kind", dw)) {
        if (auto kind = parse_decoder_kind(*k)) {
          m.decoder.kind = *kind;
        } else {
          r.error(dw + ".kind", "unknown decoder '" + *k + "'");
        }
      }
      if (auto a = r.string(d, "aggregator", dw)) {
        if (*a == "conv") {
          m.decoder.aggregator = Aggregator::conv;
        } else if (*a == "attn") {
          m.decoder.aggregator = Aggregator::attn;
        } else {
          r.error(dw + ".aggregator", "expected conv or attn");
        }
      }
      r.sizes(d, "hidden", dw, m.decoder.hidden);
      r.number(d, "tau", dw, m.decoder.tau);
      r.number(d, "num_bases", dw, m.decoder.num_bases);
    }
    if (!(m.decoder.tau > 0)) r.error(dw + ".tau", "must be positive");
  }
  if (task_ok) {
    try {
      check_task_decoder(m.task, m.decoder.kind);
    } catch (const ConfigError& e) {
      r.error(where + ".decoder", e.what());
    }
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    const std::string aw = where + ".augment";
    if (r.object(a, aw, {"edge_drop_p", "feature_mask_p"})) {
      r.number(a, "edge_drop_p", aw, m.augment.edge_drop_p);
      r.number(a, "feature_mask_p", aw, m.augment.feature_mask_p);
      if (!in_unit(m.augment.edge_drop_p)) r.error(aw + ".edge_drop_p", "must be in [0,1]");
      if (!in_unit(m.augment.feature_mask_p)) r.error(aw + ".feature_mask_p", "must be in [0,1]");
    }
  }
}

// "grid": {"tasks": [...], "encoders": [...]} expands to every pair with the
// task's default decoder.
void read_grid(Reader& r, const json& j, std::vector<ModelConfig>& out) {
  const std::string where = "grid";
  if (!r.object(j, where, {"tasks", "encoders", "hidden"})) return;
  std::vector<Task> tasks;
  std::vector<EncoderFamily> encoders;
  auto names = [&](const char* key) {
    std::vector<std::string> v;
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
      r.error(where + "." + key, "expected a non-empty array of names");
      return v;
    }
    for (const auto& e : j.at(key)) {
      if (e.is_string()) {
        v.push_back(e.get<std::string>());
      } else {
        r.error(where + "." + key, "expected strings");
      }
    }
    return v;
  };
  for (const auto& t : names("tasks")) {
    if (auto task = parse_task(t)) {
      tasks.push_back(*task);
    } else {
      r.error(where + ".tasks", "unknown task '" + t + "'");
    }
  }
  for (const auto& e : names("encoders")) {
    if (auto enc = parse_encoder_family(e)) {
      encoders.push_back(*enc);
    } else {
      r.error(where + ".encoders", "unknown encoder '" + e + "'");
    }
  }
  std::vector<std::size_t> hidden{384, 256};
  r.sizes(j, "hidden", where, hidden);
  if (hidden.size() != 2) r.error(where + ".hidden", "exactly two hidden layer widths are required");
  for (auto t : tasks) {
    for (auto e : encoders) {
      ModelConfig m;
      m.task = t;
      m.encoder = e;
      m.hidden = hidden;
      m.decoder = DecoderSpec{};
      m.decoder.kind = default_decoder(t);
      out.push_back(m);
    }
  }
}

void read_training(Reader& r, const json& j, RunConfig& cfg) {
  const std::string where = "training";
  if (!r.object(j, where, {"epochs", "batch_size", "fanout", "lr", "beta1", "beta2", "eps", "seeds"})) return;
  auto& t = cfg.training;
  r.number(j, "epochs", where, t.epochs);
  r.number(j, "batch_size", where, t.batch_size);
  r.number(j, "fanout", where, t.fanout);
  r.number(j, "lr", where, t.adam.lr);
  r.number(j, "beta1", where, t.adam.beta1);
  r.number(j, "beta2", where, t.adam.beta2);
  r.number(j, "eps", where, t.adam.eps);
  if (t.epochs == 0) r.error(where + ".epochs", "must be positive");
  if (t.fanout == 0) r.error(where + ".fanout", "must be positive");
  if (!(t.adam.lr > 0)) r.error(where + ".lr", "must be positive");
  if (!(t.adam.beta1 >= 0 && t.adam.beta1 < 1)) r.error(where + ".beta1", "must be in [0,1)");
  if (!(t.adam.beta2 >= 0 && t.adam.beta2 < 1)) r.error(where + ".beta2", "must be in [0,1)");
  if (!(t.adam.eps > 0)) r.error(where + ".eps", "must be positive");
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array()) {
      r.error(where + ".seeds", "expected an array of integers");
    } else {
      cfg.seeds.clear();
      for (const auto& e : s) {
        if (e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0)) {
          cfg.seeds.push_back(e.get<std::uint64_t>());
        } else {
          r.error(where + ".seeds", "seeds must be non-negative integers");
        }
      }
    }
  }
}

bool file_exists(const fs::path& p) {
  std::error_code ec;
  return fs::exists(p, ec);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<std::string> errors;
  Reader r(errors, base_dir);
  RunConfig cfg;
  cfg.source_text = j.dump();
  if (r.object(j, "config", {"graphs", "refinement", "models", "grid", "training", "output"})) {
    if (j.contains("graphs")) {
      const auto& gs = j.at("graphs");
      if (!gs.is_array()) {
        r.error("graphs", "expected an array");
      } else {
        for (std::size_t i = 0; i < gs.size(); ++i) {
          GraphPaths g;
          read_graph(r, gs[i], "graphs[" + std::to_string(i) + "]", g);
          if (g.name.empty()) g.name = "graph" + std::to_string(i);
          cfg.graphs.push_back(std::move(g));
        }
      }
    }
    std::set<std::string> names;
    for (const auto& g : cfg.graphs) {
      if (!names.insert(g.name).second) r.error("graphs", "duplicate graph name '" + g.name + "'");
    }
    if (j.contains("refinement")) {
      RefinementConfig rc;
      read_refinement(r, j.at("refinement"), "refinement", rc);
      cfg.refinement = rc;
    }
    if (j.contains("models")) {
      const auto& ms = j.at("models");
      if (!ms.is_array()) {
        r.error("models", "expected an array");
      } else {
        for (std::size_t i = 0; i < ms.size(); ++i) {
          ModelConfig m;
          read_model(r, ms[i], "models[" + std::to_string(i) + "]", m);
          cfg.models.push_back(m);
        }
      }
    }
    if (j.contains("grid")) read_grid(r, j.at("grid"), cfg.models);
    if (j.contains("training")) read_training(r, j.at("training"), cfg);
    cfg.output = r.resolve(r.string(j, "output", "config").value_or("out"));
  }
  for (auto& e : check_run_config(cfg)) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid run configuration (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

std::vector<std::string> check_run_config(const RunConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.seeds.empty()) out.push_back("training.seeds: seed list is empty");
  for (std::size_t i = 0; i < cfg.graphs.size(); ++i) {
    const auto& g = cfg.graphs[i];
    const std::string where = "graphs[" + std::to_string(i) + "]";
    for (auto [key, p] : {std::pair{"triples", &g.triples}, std::pair{"features", &g.features},
                          std::pair{"index", &g.index}, std::pair{"gold", &g.gold}, std::pair{"roles", &g.roles},
                          std::pair{"sentences", &g.sentences}, std::pair{"relation_features", &g.relation_features},
                          std::pair{"relation_index", &g.relation_index}}) {
      if (!p->empty() && !file_exists(*p)) out.push_back(where + "." + key + ": file not found: " + p->string());
    }
  }
  if (cfg.refinement) {
    const auto& v = cfg.refinement->validator;
    if (v.kind == ValidatorKind::verdict_file && !v.verdict_file.empty() && !file_exists(v.verdict_file)) {
      out.push_back("refinement.validator.verdict_file: file not found: " + v.verdict_file.string());
    }
    if (!v.stoplist.empty() && !file_exists(v.stoplist)) {
      out.push_back("refinement.validator.stoplist: file not found: " + v.stoplist.string());
    }
    for (const auto* p : {&cfg.refinement->supplementary_features, &cfg.refinement->supplementary_index}) {
      if (!p->empty() && !file_exists(*p)) out.push_back("refinement: file not found: " + p->string());
    }
  }
  return out;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

Dataset load_dataset(const GraphPaths& p) {
  Dataset d;
  d.name = p.name;
  d.graph = load_triples(p.triples, p.normalize);
  if (!p.roles.empty()) load_roles(p.roles, d.graph, p.normalize);
  if (!p.gold.empty()) d.gold = load_gold(p.gold, d.graph, p.normalize);
  if (!p.features.empty()) {
    if (p.index.empty()) throw InputError("feature file " + p.features.string() + " has no index file");
    d.graph.set_node_features(load_features(p.features, p.index, d.graph, p.normalize));
  }
  if (!p.relation_features.empty()) {
    d.graph.set_relation_features(load_relation_features(p.relation_features, p.relation_index, d.graph, p.normalize));
  }
  return d;
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  std::vector<std::string> errors;
  Reader r(errors, {});
  SyntheticSpec s;
  const std::string w = "synth";
  if (r.object(j, w, {"n_types", "terms_per_type", "n_relations", "relations", "edges_per_relation_term",
                      "type_link_frac", "types_in_schema", "feature_dim", "term_noise_sigma", "corruption", "seed"})) {
    r.number(j, "n_types", w, s.n_types);
    r.number(j, "terms_per_type", w, s.terms_per_type);
    r.number(j, "n_relations", w, s.n_relations);
    r.number(j, "edges_per_relation_term", w, s.edges_per_relation_term);
    r.number(j, "type_link_frac", w, s.type_link_frac);
    r.boolean(j, "types_in_schema", w, s.types_in_schema);
    r.number(j, "feature_dim", w, s.feature_dim);
    r.number(j, "term_noise_sigma", w, s.term_noise_sigma);
    r.number(j, "seed", w, s.seed);
    if (j.contains("relations")) {
      const auto& rs = j.at("relations");
      if (!rs.is_array()) {
        r.error(w + ".relations", "expected an array");
      } else {
        for (std::size_t i = 0; i < rs.size(); ++i) {
          const std::string rw = w + ".relations[" + std::to_string(i) + "]";
          SchemaRelation rel;
          if (!r.object(rs[i], rw, {"name", "domain", "range"})) continue;
          if (auto n = r.string(rs[i], "name", rw)) rel.name = *n;
          r.number(rs[i], "domain", rw, rel.domain);
          r.number(rs[i], "range", rw, rel.range);
          if (rel.name.empty()) rel.name = "rel" + std::to_string(i);
          s.relations.push_back(rel);
        }
      }
    }
    if (j.contains("corruption")) {
      const auto& c = j.at("corruption");
      const std::string cw = w + ".corruption";
      if (r.object(c, cw, {"edge_drop_frac", "spurious_frac", "fragment_frac", "feature_noise_sigma"})) {
        r.number(c, "edge_drop_frac", cw, s.corruption.edge_drop_frac);
        r.number(c, "spurious_frac", cw, s.corruption.spurious_frac);
        r.number(c, "fragment_frac", cw, s.corruption.fragment_frac);
        r.number(c, "feature_noise_sigma", cw, s.corruption.feature_noise_sigma);
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return s;
}

std::vector<std::string> provenance_header(const std::string& config_text, const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return {"gsslbench " + std::string(kToolVersion), "config " + text::hex64(text::fnv1a(config_text)),
          "seeds " + s};
}

std::vector<std::string> provenance_header(const RunConfig& cfg) {
  return provenance_header(cfg.source_text, cfg.seeds);
}

}  // namespace gssl
