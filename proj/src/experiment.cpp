#include "gssl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gssl/error.hpp"
#include "gssl/log.hpp"
#include "gssl/rng.hpp"
#include "gssl/sampler.hpp"
#include "gssl/text.hpp"

namespace gssl {

using ad::Index;
using ad::Tensor;

std::string ModelConfig::key() const {
  return std::string(task_name(task)) + "/" + encoder_name() + "/" + decoder_name();
}

std::vector<ad::NamedTensor> TrainedModel::named_parameters() const {
  std::vector<ad::NamedTensor> out;
  for (auto& [name, t] : encoder.named_parameters()) out.push_back({name, t});
  for (auto& [name, t] : decoder.named_parameters()) out.push_back({name, t});
  return out;
}

std::size_t effective_batch_size(const TrainingConfig& t, std::size_t num_nodes) {
  if (t.batch_size > 0) return t.batch_size;
  return num_nodes < 100000 ? 256 : 512;
}

namespace {

void check_dataset(const Dataset& data) {
  if (!data.graph.has_node_features()) throw ConfigError("graph '" + data.name + "' has no node features");
  if (data.graph.type_nodes().empty()) throw ConfigError("graph '" + data.name + "' has no type nodes");
}

Index iota(std::size_t n) {
  Index idx(n);
  for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

template <typename V>
void shuffle(V& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<std::pair<std::size_t, std::size_t>> chunks(std::size_t n, std::size_t size, std::size_t min_last) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += size) out.emplace_back(b, std::min(n, b + size));
  if (out.size() > 1 && out.back().second - out.back().first < min_last) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

void require_finite(float v, std::size_t epoch) {
  if (!std::isfinite(v)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
}

}  // namespace

TrainedModel blank_model(const ModelConfig& model, const Dataset& data, std::uint64_t seed) {
  check_dataset(data);
  check_task_decoder(model.task, model.decoder.kind);
  const auto& g = data.graph;
  const std::size_t d = g.node_features().dim();
  auto spec = make_encoder_spec(model.encoder, d, model.hidden, model.num_bases, model.dropout,
                                derive_seed(seed, "encoder"));
  validate_encoder_spec(spec, d, g.num_relations());
  if (model.task == Task::relation_rec && g.num_relations() == 0) {
    throw ConfigError("relation reconstruction needs at least one relation");
  }
  Encoder<float> enc(spec, g.num_relations());
  Decoder<float> dec(model.decoder, enc.out_dim(), d, g.num_relations(), derive_seed(seed, "decoder"));
  return TrainedModel{std::move(enc), std::move(dec), {}};
}

TrainedModel train_model(const ModelConfig& model, const TrainingConfig& training, const Dataset& data,
                         std::uint64_t seed) {
  auto m = blank_model(model, data, seed);
  const auto& g = data.graph;
  const auto x = feature_tensor(g.node_features());
  std::vector<Tensor<float>> params = m.encoder.parameters();
  for (auto& [name, t] : m.decoder.named_parameters()) params.push_back(t);
  ad::Adam<float> opt(params, training.adam);

  const std::size_t bs = effective_batch_size(training, g.num_nodes());
  const std::vector<std::size_t> fanouts(model.hidden.size(), training.fanout);
  const Direction dir = layer_direction(model.encoder.kind);
  std::vector<bool> is_type(g.num_nodes(), false);
  for (auto t : g.type_nodes()) is_type[t] = true;

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= training.epochs; ++epoch) {
    Rng order_rng(derive_seed(seed, "order", epoch));
    double loss_sum = 0;
    std::size_t loss_batches = 0;
    double acc_weighted = 0;
    std::size_t acc_edges = 0;

    auto optimize = [&](const Tensor<float>& loss) {
      require_finite(loss.item(), epoch);
      ad::backward(loss);
      opt.step();
      opt.zero_grad();
      loss_sum += loss.item();
      ++loss_batches;
      ++step;
    };

    if (model.task == Task::relation_rec) {
      if (g.num_edges() == 0) throw ConfigError("graph '" + data.name + "' has no edges to reconstruct");
      std::vector<std::uint32_t> order(g.num_edges());
      for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, order_rng);
      for (auto [b, e] : chunks(order.size(), bs, 1)) {
        std::vector<NodeId> seeds;
        for (std::size_t i = b; i < e; ++i) {
          seeds.push_back(g.edges()[order[i]].head);
          seeds.push_back(g.edges()[order[i]].tail);
        }
        auto batch = sample_neighbors(g, seeds, fanouts, dir, derive_seed(seed, "sample", step));
        std::unordered_map<NodeId, std::uint32_t> local;
        for (std::uint32_t i = 0; i < batch.num_seeds; ++i) local.emplace(batch.nodes[i], i);
        Index head, rel, tail;
        for (std::size_t i = b; i < e; ++i) {
          const auto& edge = g.edges()[order[i]];
          head.push_back(local.at(edge.head));
          rel.push_back(edge.relation);
          tail.push_back(local.at(edge.tail));
        }
        Rng drop(derive_seed(seed, "dropout", step));
        auto h = encode(m.encoder, x, batch, model.dropout > 0 ? &drop : nullptr);
        auto out = relation_reconstruction_loss(h, m.decoder.relations(), head, rel, tail);
        acc_weighted += out.accuracy * static_cast<double>(head.size());
        acc_edges += head.size();
        optimize(out.loss);
      }
    } else {
      std::vector<NodeId> order(g.num_nodes());
      for (NodeId i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, order_rng);
      const std::size_t min_last = model.task == Task::contrastive ? 2 : 1;
      for (auto [b, e] : chunks(order.size(), bs, min_last)) {
        std::vector<NodeId> seeds(order.begin() + static_cast<std::ptrdiff_t>(b),
                                  order.begin() + static_cast<std::ptrdiff_t>(e));
        auto batch = sample_neighbors(g, seeds, fanouts, dir, derive_seed(seed, "sample", step));
        const Index seed_rows = iota(batch.num_seeds);
        Rng drop(derive_seed(seed, "dropout", step));
        Rng* drop_rng = model.dropout > 0 ? &drop : nullptr;
        if (model.task == Task::feature_rec) {
          auto h = encode(m.encoder, x, batch, drop_rng);
          auto xhat = m.decoder.reconstruct(batch.sub, h);
          Index global(batch.nodes.begin(), batch.nodes.begin() + static_cast<std::ptrdiff_t>(batch.num_seeds));
          optimize(mse_loss(ad::gather_rows(xhat, seed_rows), ad::gather_rows(x, global)));
        } else {
          if (batch.num_seeds < 2) continue;
          Index rows(batch.nodes.begin(), batch.nodes.end());
          auto xb = ad::gather_rows(x, rows);
          auto spec1 = model.augment, spec2 = model.augment;
          spec1.seed = derive_seed(seed, "view1", step);
          spec2.seed = derive_seed(seed, "view2", step);
          auto v1 = augment_view(batch.sub, xb.cols(), spec1);
          auto v2 = augment_view(batch.sub, xb.cols(), spec2);
          auto h1 = m.encoder.forward(v1.sub, apply_feature_mask(xb, v1), drop_rng);
          auto h2 = m.encoder.forward(v2.sub, apply_feature_mask(xb, v2), drop_rng);
          InfoNceOptions nce;
          nce.tau = model.decoder.tau;
          nce.inter_view_only = model.inter_view_only;
          if (model.exclude_type_negatives) {
            for (std::size_t i = 0; i < batch.num_seeds; ++i) nce.exclude_negative.push_back(is_type[batch.nodes[i]]);
          }
          optimize(infonce_loss(ad::gather_rows(h1, seed_rows), ad::gather_rows(h2, seed_rows), nce));
        }
      }
    }
    EpochLog log_entry{epoch, loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0, std::nullopt};
    if (acc_edges) log_entry.recon_accuracy = acc_weighted / static_cast<double>(acc_edges);
    m.curve.push_back(log_entry);
  }
  return m;
}

ad::Tensor<float> infer_embeddings(const TrainedModel& m, const Dataset& data) {
  return encode_full(m.encoder, data.graph, feature_tensor(data.graph.node_features()));
}

namespace {

std::vector<NodeId> gold_targets(const Dataset& data) {
  std::vector<NodeId> t;
  for (const auto& [v, type] : data.gold.type_of) t.push_back(v);
  return t;
}

SeedRun run_seed(const ModelConfig& model, const TrainingConfig& training, const Dataset& data,
                 std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto m = train_model(model, training, data, seed);
    run.curve = m.curve;
    run.epochs = m.curve.size();
    auto h = infer_embeddings(m, data);
    for (float v : h.data()) {
      if (!std::isfinite(v)) throw NumericError("non-finite embedding after training");
    }
    auto targets = gold_targets(data);
    auto types = data.graph.type_nodes();
    run.typing = assign_types(EmbeddingView::of(h), targets, types);
    run.metrics = compute_metrics(run.typing, data.gold);
  } catch (const NumericError& e) {
    run.failed = true;
    run.failure = e.what();
    log::warn("run " + model.key() + " on " + data.name + " seed " + std::to_string(seed) + " failed: " + e.what());
  }
  run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return run;
}

MeanStd summarize(const RunRecord& r, double MetricsReport::*field) {
  std::vector<double> v;
  for (const auto& s : r.runs) {
    if (!s.failed) v.push_back(s.metrics.*field);
  }
  return mean_std(v);
}

}  // namespace

MeanStd RunRecord::accuracy() const { return summarize(*this, &MetricsReport::accuracy); }
MeanStd RunRecord::macro_precision() const { return summarize(*this, &MetricsReport::macro_precision); }
MeanStd RunRecord::macro_f1() const { return summarize(*this, &MetricsReport::macro_f1); }

std::size_t RunRecord::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& s) { return s.failed; }));
}

RunRecord run_experiment(const ModelConfig& model, const TrainingConfig& training, const Dataset& data,
                         const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("seed list is empty");
  blank_model(model, data, seeds.front());  // surfaces configuration errors up front
  RunRecord rec{model, data.name, {}};
  for (auto s : seeds) rec.runs.push_back(run_seed(model, training, data, s));
  return rec;
}

GapReport dual_gap_report(const std::vector<RunRecord>& clean, const std::vector<RunRecord>& variant) {
  GapReport rep;
  std::map<std::string, const RunRecord*> by_key;
  for (const auto& r : variant) by_key[r.model.key()] = &r;
  std::set<std::string> matched;
  std::map<std::string, std::pair<double, double>> best;  // task -> (clean, variant)
  for (const auto& c : clean) {
    auto it = by_key.find(c.model.key());
    if (it == by_key.end()) {
      rep.unmatched.push_back(c.model.key() + " (missing from variant)");
      continue;
    }
    matched.insert(it->first);
    const double a = c.accuracy().mean, b = it->second->accuracy().mean;
    rep.rows.push_back({c.model.key(), a, b, a - b});
    auto task = std::string(task_name(c.model.task));
    auto [slot, fresh] = best.try_emplace(task, a, b);
    if (!fresh) {
      slot->second.first = std::max(slot->second.first, a);
      slot->second.second = std::max(slot->second.second, b);
    }
  }
  for (const auto& r : variant) {
    if (!matched.contains(r.model.key())) rep.unmatched.push_back(r.model.key() + " (missing from clean)");
  }
  for (const auto& [task, v] : best) rep.best_per_task.emplace_back(task, v.first - v.second);
  return rep;
}

GridReport run_grid(const std::vector<ModelConfig>& configs, const TrainingConfig& training,
                    const std::vector<Dataset>& graphs, const std::vector<std::uint64_t>& seeds,
                    const GridOptions& opts) {
  if (configs.empty() || graphs.empty()) throw ConfigError("grid has zero valid configurations");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  std::vector<std::string> problems;
  for (const auto& c : configs) {
    for (const auto& g : graphs) {
      try {
        blank_model(c, g, seeds.front());
      } catch (const ConfigError& e) {
        problems.push_back(c.key() + " on " + g.name + ": " + e.what());
      }
    }
  }
  if (!problems.empty()) throw ConfigError("invalid grid entries:\n  " + text::join(problems, "\n  "));

  struct Job {
    std::size_t config, graph, seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (std::size_t g = 0; g < graphs.size(); ++g)
      for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({c, g, s});

  std::vector<SeedRun> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        const auto& job = jobs[j];
        results[j] = run_seed(configs[job.config], training, graphs[job.graph], seeds[job.seed]);
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(opts.workers, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  GridReport rep;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      RunRecord rec{configs[c], graphs[g].name, {}};
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        rec.runs.push_back(std::move(results[(c * graphs.size() + g) * seeds.size() + s]));
      }
      rep.records.push_back(std::move(rec));
    }
  }
  return rep;
}

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pm(const MeanStd& m) { return fmt(m.mean, 4) + " ± " + fmt(m.std, 4); }

std::ofstream open_out(const std::filesystem::path& path, const std::vector<std::string>& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  return out;
}

std::string pad(std::string s, std::size_t w) {
  // Width counted in code points so "±" does not skew columns.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  if (cps < w) s.append(w - cps, ' ');
  return s;
}

}  // namespace

void write_grid_csv(const GridReport& report, const std::filesystem::path& path, const GridOptions& opts,
                    const std::vector<std::string>& header) {
  auto out = open_out(path, header);
  out << "task,encoder,decoder,aggregator,graph,seed,accuracy,macro_p,macro_f1,epochs,wall_ms,status\n";
  for (const auto& rec : report.records) {
    for (const auto& run : rec.runs) {
      out << task_name(rec.model.task) << ',' << layer_kind_name(rec.model.encoder.kind) << ','
          << rec.model.decoder_name() << ',' << aggregator_name(rec.model.encoder.aggregator) << ','
          << text::csv_field(rec.graph) << ',' << run.seed << ',';
      if (run.failed) {
        out << ",,,";
      } else {
        out << fmt(run.metrics.accuracy) << ',' << fmt(run.metrics.macro_precision) << ','
            << fmt(run.metrics.macro_f1) << ',';
      }
      out << run.epochs << ',' << (opts.timing_in_report ? fmt(run.wall_ms, 1) : std::string()) << ','
          << (run.failed ? "failed" : "ok") << '\n';
    }
  }
}

void write_timing_csv(const GridReport& report, const std::filesystem::path& path) {
  auto out = open_out(path, {});
  out << "task,encoder,decoder,aggregator,graph,seed,wall_ms\n";
  for (const auto& rec : report.records) {
    for (const auto& run : rec.runs) {
      out << task_name(rec.model.task) << ',' << layer_kind_name(rec.model.encoder.kind) << ','
          << rec.model.decoder_name() << ',' << aggregator_name(rec.model.encoder.aggregator) << ','
          << text::csv_field(rec.graph) << ',' << run.seed << ',' << fmt(run.wall_ms, 1) << '\n';
    }
  }
}

std::string render_grid_summary(const GridReport& report) {
  std::ostringstream os;
  std::vector<std::string> tasks;
  std::vector<std::string> graphs;
  for (const auto& r : report.records) {
    auto t = std::string(task_name(r.model.task));
    if (std::find(tasks.begin(), tasks.end(), t) == tasks.end()) tasks.push_back(t);
    if (std::find(graphs.begin(), graphs.end(), r.graph) == graphs.end()) graphs.push_back(r.graph);
  }

  os << "Results per task (mean ± population std over seeds; * = best mean accuracy per task and graph)\n";
  for (const auto& task : tasks) {
    os << "\n[" << task << "]\n";
    os << pad("graph", 14) << pad("encoder", 18) << pad("decoder", 22) << pad("accuracy", 20)
       << pad("macro-P", 20) << pad("macro-F1", 20) << "failed\n";
    for (const auto& graph : graphs) {
      const RunRecord* best = nullptr;
      for (const auto& r : report.records) {
        if (task_name(r.model.task) != task || r.graph != graph || r.failures() == r.runs.size()) continue;
        if (!best || r.accuracy().mean > best->accuracy().mean) best = &r;
      }
      for (const auto& r : report.records) {
        if (task_name(r.model.task) != task || r.graph != graph) continue;
        const bool all_failed = r.failures() == r.runs.size();
        os << pad(r.graph, 14) << pad(r.model.encoder_name(), 18) << pad(r.model.decoder_name(), 22);
        if (all_failed) {
          os << pad("-", 20) << pad("-", 20) << pad("-", 20);
        } else {
          os << pad(pm(r.accuracy()), 20) << pad(pm(r.macro_precision()), 20) << pad(pm(r.macro_f1()), 20);
        }
        os << r.failures() << '/' << r.runs.size() << (best == &r ? "  *" : "") << '\n';
      }
    }
  }

  os << "\nAccuracy distribution per task (over configuration means)\n";
  os << pad("task", 16) << pad("graph", 14) << pad("n", 6) << pad("min", 10) << pad("median", 10) << "max\n";
  for (const auto& task : tasks) {
    for (const auto& graph : graphs) {
      std::vector<double> v;
      for (const auto& r : report.records) {
        if (task_name(r.model.task) == task && r.graph == graph && r.failures() < r.runs.size()) {
          v.push_back(r.accuracy().mean);
        }
      }
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      const double median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      os << pad(task, 16) << pad(graph, 14) << pad(std::to_string(v.size()), 6) << pad(fmt(v.front(), 4), 10)
         << pad(fmt(median, 4), 10) << fmt(v.back(), 4) << '\n';
    }
  }

  if (graphs.size() > 1) {
    os << "\nAccuracy change relative to graph '" << graphs.front() << "'\n";
    os << pad("configuration", 48);
    for (std::size_t g = 1; g < graphs.size(); ++g) os << pad(graphs[g], 14);
    os << '\n';
    std::map<std::string, std::map<std::string, double>> acc;
    std::vector<std::string> keys;
    for (const auto& r : report.records) {
      if (!acc.contains(r.model.key())) keys.push_back(r.model.key());
      acc[r.model.key()][r.graph] = r.failures() == r.runs.size() ? std::nan("") : r.accuracy().mean;
    }
    for (const auto& k : keys) {
      os << pad(k, 48);
      const double base = acc[k][graphs.front()];
      for (std::size_t g = 1; g < graphs.size(); ++g) {
        const double d = acc[k][graphs[g]] - base;
        os << pad(std::isnan(d) ? "-" : (d >= 0 ? "+" : "") + fmt(d, 4), 14);
      }
      os << '\n';
    }
  }

  auto clean_it = std::find(graphs.begin(), graphs.end(), "clean");
  if (clean_it != graphs.end()) {
    std::vector<RunRecord> clean;
    for (const auto& r : report.records) {
      if (r.graph == "clean") clean.push_back(r);
    }
    for (const auto& graph : graphs) {
      if (graph == "clean") continue;
      std::vector<RunRecord> variant;
      for (const auto& r : report.records) {
        if (r.graph == graph) variant.push_back(r);
      }
      auto gap = dual_gap_report(clean, variant);
      os << "\nGap clean - " << graph << " (mean accuracy)\n";
      for (const auto& row : gap.rows) {
        os << pad(row.key, 48) << pad(fmt(row.clean, 4), 10) << pad(fmt(row.variant, 4), 10) << fmt(row.delta, 4) << '\n';
      }
      for (const auto& [task, d] : gap.best_per_task) os << pad("best " + task, 48) << fmt(d, 4) << '\n';
      for (const auto& u : gap.unmatched) os << "unmatched: " << u << '\n';
    }
  }
  return os.str();
}

void write_loss_curve(const std::vector<EpochLog>& curve, const std::filesystem::path& path,
                      const std::vector<std::string>& header) {
  auto out = open_out(path, header);
  const bool acc = !curve.empty() && curve.front().recon_accuracy.has_value();
  out << (acc ? "epoch,loss,recon_accuracy\n" : "epoch,loss\n");
  for (const auto& e : curve) {
    out << e.epoch << ',' << fmt(e.loss, 8);
    if (acc) out << ',' << fmt(e.recon_accuracy.value_or(0.0));
    out << '\n';
  }
}

}  // namespace gssl
