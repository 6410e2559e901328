// gsslbench: command-line front end for graph statistics, refinement,
// self-supervised training, term typing and synthetic dual graphs.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gssl/checkpoint.hpp"
#include "gssl/config.hpp"
#include "gssl/error.hpp"
#include "gssl/graph_io.hpp"
#include "gssl/refine.hpp"
#include "gssl/synth.hpp"
#include "gssl/text.hpp"
#include "gssl/typing.hpp"

namespace fs = std::filesystem;
using namespace gssl;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";
  std::size_t workers = 1;
  bool exclude_type_negatives = false;
  bool inter_view_only = false;
  bool timing = false;
};

struct GraphArgs {
  GraphPaths paths;
  std::string triples, features, index, gold, roles, sentences;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--triples", triples, "triples TSV (head, relation, tail[, sentence_id])");
    cmd->add_option("--features", features, "NTDF node feature file");
    cmd->add_option("--index", index, "feature index TSV (row, label)");
    cmd->add_option("--gold", gold, "gold TSV (term, type)");
    cmd->add_option("--roles", roles, "node role TSV (label, term|type|other)");
    cmd->add_option("--sentences", sentences, "sentences JSONL");
    cmd->add_option("--name", paths.name, "graph name used in reports");
    cmd->add_flag("--normalize", paths.normalize, "lowercase and collapse whitespace in labels");
  }
  bool given() const { return !triples.empty(); }
  GraphPaths resolved() const {
    GraphPaths p = paths;
    p.triples = triples;
    p.features = features;
    p.index = index;
    p.gold = gold;
    p.roles = roles;
    p.sentences = sentences;
    if (p.name.empty()) p.name = fs::path(triples).parent_path().filename().string();
    if (p.name.empty()) p.name = "graph";
    return p;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config with command-line overrides applied.
RunConfig effective_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("this command needs --config");
  RunConfig cfg = load_run_config(g.config);
  if (g.seed) cfg.seeds = {*g.seed};
  if (!g.out.empty()) cfg.output = g.out;
  for (auto& m : cfg.models) {
    if (g.exclude_type_negatives) m.exclude_type_negatives = true;
    if (g.inter_view_only) m.inter_view_only = true;
  }
  // overrides become part of the provenance hash
  std::ostringstream extra;
  extra << cfg.source_text << "|seeds";
  for (auto s : cfg.seeds) extra << ',' << s;
  extra << "|xtn" << g.exclude_type_negatives << "|ivo" << g.inter_view_only;
  cfg.source_text = extra.str();
  return cfg;
}

std::vector<GraphPaths> graphs_from(const Globals& g, const GraphArgs& ga) {
  if (ga.given()) return {ga.resolved()};
  auto cfg = effective_config(g);
  if (cfg.graphs.empty()) throw ConfigError("config lists no graphs");
  return cfg.graphs;
}

fs::path out_dir(const Globals& g, const fs::path& fallback) {
  fs::path p = g.out.empty() ? fallback : fs::path(g.out);
  fs::create_directories(p);
  return p;
}

std::string model_dir_name(const ModelConfig& m) {
  return std::string(task_name(m.task)) + "_" + m.encoder_name() + "_" + m.decoder_name();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- stats ----------------------------------------------------------------

int cmd_stats(const Globals& g, const GraphArgs& ga) {
  auto graphs = graphs_from(g, ga);
  const bool csv = g.format == "csv";
  if (csv) std::cout << "graph,n_nodes,n_edges,n_relations,n_comp,r_giant,avg_deg\n";
  for (const auto& p : graphs) {
    auto kg = load_triples(p.triples, p.normalize);
    if (!p.roles.empty()) load_roles(p.roles, kg, p.normalize);
    const auto s = topology_stats(kg);
    if (csv) {
      std::cout << text::csv_field(p.name) << ',' << s.n_nodes << ',' << s.n_edges << ',' << s.n_relations << ','
                << s.n_comp << ',' << fixed(s.r_giant, 4) << ',' << fixed(s.avg_deg, 4) << '\n';
    } else {
      std::cout << "graph      " << p.name << '\n'
                << "|V|        " << s.n_nodes << '\n'
                << "|E|        " << s.n_edges << '\n'
                << "|R|        " << s.n_relations << '\n'
                << "n_comp     " << s.n_comp << '\n'
                << "r_giant    " << fixed(s.r_giant, 4) << '\n'
                << "avg_deg    " << fixed(s.avg_deg, 4) << '\n';
    }
  }
  return 0;
}

// ---- refine ---------------------------------------------------------------

struct RefineArgs {
  std::string mode;
  std::string validator;
  std::string verdict_file;
  bool strict = false;
  std::string stoplist;
  std::string endpoint;
  int timeout_ms = 30000;
  std::size_t batch_size = 32;
  std::string supp_features, supp_index;
  bool zero_init = false;
};

void write_stats_csv(const RefinementLog& log, const fs::path& path, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  out << "stage,n_nodes,n_edges,n_relations,n_comp,r_giant,avg_deg\n";
  for (auto [stage, s] : {std::pair{"before", &log.stats_before}, std::pair{"after", &log.stats_after}}) {
    if (!*s) continue;
    const auto& t = **s;
    out << stage << ',' << t.n_nodes << ',' << t.n_edges << ',' << t.n_relations << ',' << t.n_comp << ','
        << fixed(t.r_giant, 4) << ',' << fixed(t.avg_deg, 4) << '\n';
  }
}

int cmd_refine(const Globals& g, const GraphArgs& ga, const RefineArgs& ra) {
  GraphPaths p;
  RefinementConfig rc;
  std::string config_text;
  std::vector<std::uint64_t> seeds;
  if (ga.given()) {
    p = ga.resolved();
  } else {
    auto cfg = effective_config(g);
    if (cfg.graphs.empty()) throw ConfigError("config lists no graphs");
    p = cfg.graphs.front();
    if (cfg.refinement) rc = *cfg.refinement;
    config_text = cfg.source_text;
    seeds = cfg.seeds;
  }
  if (auto m = parse_refine_mode(ra.mode)) {
    rc.mode = *m;
  } else {
    throw ConfigError("refine mode must be enrich, clean or combined, got '" + ra.mode + "'");
  }
  if (!ra.validator.empty()) {
    auto k = parse_validator_kind(ra.validator);
    if (!k) throw ConfigError("unknown validator '" + ra.validator + "'");
    rc.validator.kind = *k;
  }
  if (!ra.verdict_file.empty()) rc.validator.verdict_file = ra.verdict_file;
  if (ra.strict) rc.validator.strict = true;
  if (!ra.stoplist.empty()) rc.validator.stoplist = ra.stoplist;
  if (!ra.endpoint.empty()) rc.validator.remote.endpoint = ra.endpoint;
  if (rc.validator.remote.endpoint.empty()) {
    if (const char* env = std::getenv("NATD_VALIDATOR_URL")) rc.validator.remote.endpoint = env;
  }
  if (ra.timeout_ms <= 0) throw ConfigError("--timeout-ms must be positive");
  rc.validator.remote.timeout_ms = ra.timeout_ms;
  rc.validator.remote.batch_size = ra.batch_size;
  if (!ra.supp_features.empty()) {
    rc.supplementary_features = ra.supp_features;
    rc.supplementary_index = ra.supp_index;
  }
  if (ra.zero_init) rc.zero_init = true;
  if (rc.validator.kind == ValidatorKind::remote_service && rc.validator.remote.endpoint.empty()) {
    throw ConfigError("remote validator needs --endpoint or NATD_VALIDATOR_URL");
  }
  if (rc.validator.kind == ValidatorKind::verdict_file && rc.validator.verdict_file.empty()) {
    throw ConfigError("verdict-file validator needs --verdict-file");
  }

  if (config_text.empty()) config_text = "refine|" + ra.mode + "|" + p.triples.string() + "|" + ra.validator;
  const auto header = provenance_header(config_text, seeds);
  const fs::path dir = out_dir(g, "refined");

  Dataset d;
  d.graph = load_triples(p.triples, p.normalize);
  if (!p.roles.empty()) load_roles(p.roles, d.graph, p.normalize);
  if (!p.gold.empty()) d.gold = load_gold(p.gold, d.graph, p.normalize);
  if (!p.features.empty()) d.graph.set_node_features(load_features(p.features, p.index, d.graph, p.normalize));
  std::unordered_map<std::string, std::string> sentences;
  if (!p.sentences.empty()) sentences = load_sentences(p.sentences);

  FeatureProvider provider;
  if (!rc.supplementary_features.empty()) {
    provider = FeatureProvider::from_files(rc.supplementary_features, rc.supplementary_index);
  }
  provider.set_zero_init(rc.zero_init);

  Refined result;
  try {
    if (rc.mode == RefineMode::enrich) {
      result = enrich(d.graph, provider);
    } else {
      auto validator = make_validator(rc.validator, p.normalize);
      result = rc.mode == RefineMode::clean ? clean(d.graph, *validator, sentences)
                                            : combined_refine(d.graph, *validator, provider, sentences);
    }
  } catch (const CleanAborted& e) {
    write_log_jsonl(e.partial_log(), dir / "refinement_log.jsonl", header);
    std::cerr << "error: " << e.what() << "\npartial log written to " << (dir / "refinement_log.jsonl").string()
              << '\n';
    return 2;
  }

  save_triples(result.graph, dir / "triples.tsv", header);
  save_roles(result.graph, dir / "roles.tsv");
  if (result.graph.has_node_features()) save_features(result.graph, dir / "features.ntdf", dir / "index.tsv");
  if (!p.gold.empty()) fs::copy_file(p.gold, dir / "gold.tsv", fs::copy_options::overwrite_existing);
  write_log_jsonl(result.log, dir / "refinement_log.jsonl", header);
  write_stats_csv(result.log, dir / "stats.csv", header);
  std::cout << "added " << result.log.added.size() << ", removed " << result.log.removed.size() << "; |V| "
            << result.graph.num_nodes() << ", |E| " << result.graph.num_edges() << "\nwrote " << dir.string()
            << '\n';
  return 0;
}

// ---- train / eval ---------------------------------------------------------

fs::path checkpoint_path(const fs::path& root, const std::string& graph, const ModelConfig& m, std::uint64_t seed) {
  return root / graph / model_dir_name(m) / ("seed-" + std::to_string(seed) + ".ntdp");
}

int cmd_train(const Globals& g) {
  auto cfg = effective_config(g);
  if (cfg.graphs.empty() || cfg.models.empty()) throw ConfigError("train needs at least one graph and one model");
  const auto header = provenance_header(cfg);
  const fs::path root = cfg.output / "checkpoints";
  int rc = 0;
  for (const auto& gp : cfg.graphs) {
    const auto data = load_dataset(gp);
    for (const auto& m : cfg.models) {
      for (auto seed : cfg.seeds) {
        const auto ck = checkpoint_path(root, gp.name, m, seed);
        fs::create_directories(ck.parent_path());
        try {
          auto trained = train_model(m, cfg.training, data, seed);
          ad::save_checkpoint(ck, trained.named_parameters());
          write_loss_curve(trained.curve, ck.parent_path() / ("loss-seed-" + std::to_string(seed) + ".csv"), header);
          std::cout << gp.name << ' ' << m.key() << " seed " << seed << ": final loss "
                    << fixed(trained.curve.empty() ? 0.0 : trained.curve.back().loss, 6) << '\n';
        } catch (const NumericError& e) {
          std::cerr << "error: " << gp.name << ' ' << m.key() << " seed " << seed << ": " << e.what() << '\n';
          rc = 3;
        }
      }
    }
  }
  return rc;
}

int cmd_eval(const Globals& g, const std::string& checkpoints) {
  auto cfg = effective_config(g);
  if (cfg.graphs.empty() || cfg.models.empty()) throw ConfigError("eval needs at least one graph and one model");
  const auto header = provenance_header(cfg);
  const fs::path root = checkpoints.empty() ? cfg.output / "checkpoints" : fs::path(checkpoints);
  for (const auto& gp : cfg.graphs) {
    const auto data = load_dataset(gp);
    std::vector<NodeId> targets;
    for (const auto& [v, t] : data.gold.type_of) targets.push_back(v);
    const auto types = data.graph.type_nodes();
    TypingResult initial;
    baseline_typing(data.graph.node_features(), targets, types, data.gold, &initial);
    for (const auto& m : cfg.models) {
      for (auto seed : cfg.seeds) {
        const auto ck = checkpoint_path(root, gp.name, m, seed);
        if (!fs::exists(ck)) throw InputError("checkpoint not found: " + ck.string());
        auto model = blank_model(m, data, seed);
        auto params = model.named_parameters();
        ad::restore_into(ad::load_checkpoint(ck), params);
        const auto h = infer_embeddings(model, data);
        const auto typing = assign_types(EmbeddingView::of(h), targets, types);
        const auto metrics = compute_metrics(typing, data.gold);
        const fs::path dir = cfg.output / "eval" / gp.name / model_dir_name(m) / ("seed-" + std::to_string(seed));
        fs::create_directories(dir);
        write_typing_tsv(data.graph, typing, dir / "typing.tsv", header);
        write_metrics(data.graph, metrics, dir / "metrics.csv", header);
        write_transition_csv(transition_matrix(initial, typing, data.gold), dir / "transition.csv", header);
        std::cout << gp.name << ' ' << m.key() << " seed " << seed << ": accuracy " << fixed(metrics.accuracy, 4)
                  << ", macro-P " << fixed(metrics.macro_precision, 4) << ", macro-F1 " << fixed(metrics.macro_f1, 4)
                  << '\n';
      }
    }
  }
  return 0;
}

// ---- grid -----------------------------------------------------------------

int cmd_grid(const Globals& g) {
  auto cfg = effective_config(g);
  std::vector<Dataset> graphs;
  for (const auto& gp : cfg.graphs) graphs.push_back(load_dataset(gp));
  GridOptions opts;
  opts.workers = std::max<std::size_t>(1, g.workers);
  opts.timing_in_report = g.timing;
  const auto report = run_grid(cfg.models, cfg.training, graphs, cfg.seeds, opts);
  const auto header = provenance_header(cfg);
  fs::create_directories(cfg.output);
  write_grid_csv(report, cfg.output / "grid.csv", opts, header);
  write_timing_csv(report, cfg.output / "timing.csv");
  const auto summary = render_grid_summary(report);
  {
    std::ofstream out(cfg.output / "summary.txt");
    for (const auto& h : header) out << "# " << h << '\n';
    out << summary;
  }
  if (g.format == "csv") {
    std::cout << read_file(cfg.output / "grid.csv");
  } else {
    std::cout << summary;
  }
  std::size_t failed = 0;
  for (const auto& r : report.records) failed += r.failures();
  if (failed) std::cerr << failed << " run(s) failed; see the status column of grid.csv\n";
  return 0;
}

// ---- baseline -------------------------------------------------------------

int cmd_baseline(const Globals& g, const GraphArgs& ga) {
  auto graphs = graphs_from(g, ga);
  std::string config_text = ga.given() ? "baseline|" + ga.triples : effective_config(g).source_text;
  const auto header = provenance_header(config_text, {});
  const fs::path root = out_dir(g, ga.given() ? fs::path("baseline") : effective_config(g).output / "baseline");
  const bool csv = g.format == "csv";
  if (csv) std::cout << "graph,accuracy,macro_p,macro_f1\n";
  for (const auto& gp : graphs) {
    const auto data = load_dataset(gp);
    if (!data.graph.has_node_features()) throw InputError("baseline needs node features for " + gp.name);
    std::vector<NodeId> targets;
    for (const auto& [v, t] : data.gold.type_of) targets.push_back(v);
    TypingResult typing;
    const auto m = baseline_typing(data.graph.node_features(), targets, data.graph.type_nodes(), data.gold, &typing);
    const fs::path dir = root / gp.name;
    fs::create_directories(dir);
    write_typing_tsv(data.graph, typing, dir / "typing.tsv", header);
    write_metrics(data.graph, m, dir / "metrics.csv", header);
    if (csv) {
      std::cout << text::csv_field(gp.name) << ',' << fixed(m.accuracy, 4) << ',' << fixed(m.macro_precision, 4) << ','
                << fixed(m.macro_f1, 4) << '\n';
    } else {
      std::cout << gp.name << ": accuracy " << fixed(m.accuracy, 4) << ", macro-P " << fixed(m.macro_precision, 4)
                << ", macro-F1 " << fixed(m.macro_f1, 4) << '\n';
    }
  }
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::optional<std::size_t> n_types, terms_per_type, n_relations, feature_dim;
  std::optional<double> density, edge_drop, spurious, fragment, feature_noise, term_noise;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  SyntheticSpec s = a.spec.empty() ? SyntheticSpec{} : parse_synthetic_spec(read_file(a.spec));
  if (a.n_types) s.n_types = *a.n_types;
  if (a.terms_per_type) s.terms_per_type = *a.terms_per_type;
  if (a.n_relations) s.n_relations = *a.n_relations;
  if (a.feature_dim) s.feature_dim = *a.feature_dim;
  if (a.density) s.edges_per_relation_term = *a.density;
  if (a.edge_drop) s.corruption.edge_drop_frac = *a.edge_drop;
  if (a.spurious) s.corruption.spurious_frac = *a.spurious;
  if (a.fragment) s.corruption.fragment_frac = *a.fragment;
  if (a.feature_noise) s.corruption.feature_noise_sigma = *a.feature_noise;
  if (a.term_noise) s.term_noise_sigma = *a.term_noise;
  if (g.seed) s.seed = *g.seed;
  const auto pair = generate_synthetic(s);
  const fs::path dir = out_dir(g, "synth");
  std::ostringstream desc;
  desc << "synth|" << s.n_types << '|' << s.terms_per_type << '|' << pair.schema.size() << '|'
       << s.edges_per_relation_term << '|' << s.corruption.edge_drop_frac << '|' << s.corruption.spurious_frac << '|'
       << s.corruption.fragment_frac << '|' << s.corruption.feature_noise_sigma << '|' << s.term_noise_sigma;
  write_synthetic(pair, dir, provenance_header(desc.str(), {s.seed}));
  std::cout << "clean: |V| " << pair.clean.num_nodes() << ", |E| " << pair.clean.num_edges() << "; corrupted: |E| "
            << pair.corrupted.num_edges() << "\nwrote " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsslbench: graph self-supervised term typing workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "replace the configured seed list with one seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"text", "csv"}));
  app.add_option("--workers", g.workers, "parallel grid workers")->check(CLI::PositiveNumber);
  app.add_flag("--exclude-type-negatives", g.exclude_type_negatives, "contrastive: type nodes never act as negatives");
  app.add_flag("--inter-view-only", g.inter_view_only, "contrastive: negatives from the other view only");
  app.fallthrough();

  GraphArgs ga;
  auto* stats = app.add_subcommand("stats", "topology statistics of one or more graphs");
  ga.add_to(stats);

  RefineArgs ra;
  auto* refine = app.add_subcommand("refine", "enrich, clean or combined refinement");
  refine->add_option("mode", ra.mode, "enrich | clean | combined")->required();
  ga.add_to(refine);
  refine->add_option("--validator", ra.validator,
                     "verdict-file | heuristic-mock | remote-service | accept-all | reject-all");
  refine->add_option("--verdict-file", ra.verdict_file, "TSV head, relation, tail, verdict");
  refine->add_flag("--strict", ra.strict, "verdict-file: a missing triple is an error");
  refine->add_option("--stoplist", ra.stoplist, "heuristic-mock: generic-term stoplist file");
  refine->add_option("--endpoint", ra.endpoint, "remote-service base URL (default: $NATD_VALIDATOR_URL)");
  refine->add_option("--timeout-ms", ra.timeout_ms, "remote-service request timeout");
  refine->add_option("--batch-size", ra.batch_size, "remote-service batch size")->check(CLI::PositiveNumber);
  refine->add_option("--supplementary-features", ra.supp_features, "NTDF rows for nodes created by enrichment");
  refine->add_option("--supplementary-index", ra.supp_index, "index for --supplementary-features");
  refine->add_flag("--zero-init", ra.zero_init, "zero features for created nodes without a supplementary row");

  auto* train = app.add_subcommand("train", "train every configured model and write checkpoints");
  std::string checkpoints;
  auto* eval = app.add_subcommand("eval", "type terms with trained checkpoints");
  eval->add_option("--checkpoints", checkpoints, "checkpoint root (default: <output>/checkpoints)");
  auto* grid = app.add_subcommand("grid", "run the configuration grid");
  grid->add_flag("--timing", g.timing, "fill the wall_ms column (reports are then not byte-reproducible)");
  auto* baseline = app.add_subcommand("baseline", "type terms on raw features");
  GraphArgs gb;
  gb.add_to(baseline);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a clean/corrupted synthetic graph pair");
  synth->add_option("--spec", sa.spec, "JSON synthetic spec");
  synth->add_option("--n-types", sa.n_types);
  synth->add_option("--terms-per-type", sa.terms_per_type);
  synth->add_option("--n-relations", sa.n_relations);
  synth->add_option("--feature-dim", sa.feature_dim);
  synth->add_option("--density", sa.density, "clean edges per relation per term");
  synth->add_option("--edge-drop", sa.edge_drop);
  synth->add_option("--spurious", sa.spurious);
  synth->add_option("--fragment", sa.fragment);
  synth->add_option("--feature-noise", sa.feature_noise);
  synth->add_option("--term-noise", sa.term_noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*stats) return cmd_stats(g, ga);
    if (*refine) return cmd_refine(g, ga, ra);
    if (*train) return cmd_train(g);
    if (*eval) return cmd_eval(g, checkpoints);
    if (*grid) return cmd_grid(g);
    if (*baseline) return cmd_baseline(g, gb);
    if (*synth) return cmd_synth(g, sa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ServiceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
