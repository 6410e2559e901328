#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gssl/checkpoint.hpp"
#include "gssl/encoders.hpp"
#include "gssl/graph.hpp"
#include "gssl/graph_io.hpp"
#include "gssl/optim.hpp"
#include "gssl/pretext.hpp"
#include "gssl/typing.hpp"

namespace gssl {

inline DecoderSpec distmult_decoder() {
  DecoderSpec d;
  d.kind = DecoderKind::distmult;
  return d;
}

/// One trainable configuration: pretext task, encoder family, decoder.
struct ModelConfig {
  Task task = Task::relation_rec;
  EncoderFamily encoder{LayerKind::rgcn, Aggregator::conv};
  std::vector<std::size_t> hidden{384, 256};
  std::size_t num_bases = 8;
  double dropout = 0.0;
  DecoderSpec decoder = distmult_decoder();
  AugmentSpec augment;  // seed is replaced per run
  bool inter_view_only = false;
  bool exclude_type_negatives = false;

  std::string encoder_name() const { return encoder_family_name(encoder); }
  std::string decoder_name() const { return std::string(decoder_kind_name(decoder.kind)); }
  /// "task/encoder/decoder"
  std::string key() const;
};

struct TrainingConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 0;  // 0: 256 below 10^5 nodes, else 512
  std::size_t fanout = 200;
  ad::AdamOptions adam;
};

/// A graph ready for training and evaluation: features, roles and gold set.
struct Dataset {
  std::string name;
  KnowledgeGraph graph;
  GoldStandard gold;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;
  std::optional<double> recon_accuracy;
};

struct TrainedModel {
  Encoder<float> encoder;
  Decoder<float> decoder;
  std::vector<EpochLog> curve;

  std::vector<ad::NamedTensor> named_parameters() const;
};

std::size_t effective_batch_size(const TrainingConfig& t, std::size_t num_nodes);

/// Trains one model from `seed`. Throws NumericError on a non-finite loss
/// or gradient, ConfigError on an inconsistent configuration.
TrainedModel train_model(const ModelConfig& model, const TrainingConfig& training, const Dataset& data,
                         std::uint64_t seed);

/// Builds an untrained model with the same parameter layout (for restoring
/// checkpoints).
TrainedModel blank_model(const ModelConfig& model, const Dataset& data, std::uint64_t seed);

/// Full-graph embeddings of every node.
ad::Tensor<float> infer_embeddings(const TrainedModel& m, const Dataset& data);

struct SeedRun {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::size_t epochs = 0;  // completed
  MetricsReport metrics;
  TypingResult typing;
  std::vector<EpochLog> curve;
  double wall_ms = 0;
};

struct RunRecord {
  ModelConfig model;
  std::string graph;
  std::vector<SeedRun> runs;

  /// Mean and population std over successful runs.
  MeanStd accuracy() const;
  MeanStd macro_precision() const;
  MeanStd macro_f1() const;
  std::size_t failures() const;
};

/// Trains and evaluates once per seed. Divergent runs are recorded as failed.
RunRecord run_experiment(const ModelConfig& model, const TrainingConfig& training, const Dataset& data,
                         const std::vector<std::uint64_t>& seeds);

struct GapRow {
  std::string key;
  double clean = 0;
  double variant = 0;
  double delta = 0;  // clean - variant, mean accuracy
};

struct GapReport {
  std::vector<GapRow> rows;
  std::vector<std::string> unmatched;
  /// task -> (best clean accuracy - best variant accuracy)
  std::vector<std::pair<std::string, double>> best_per_task;
};

GapReport dual_gap_report(const std::vector<RunRecord>& clean, const std::vector<RunRecord>& variant);

struct GridOptions {
  std::size_t workers = 1;
  bool timing_in_report = false;  // wall_ms column filled (breaks byte-identity)
};

struct GridReport {
  std::vector<RunRecord> records;  // config-major, then graph
};

/// Every (config, graph, seed) run; results are assembled in input order
/// regardless of completion order. Throws ConfigError on an empty grid.
GridReport run_grid(const std::vector<ModelConfig>& configs, const TrainingConfig& training,
                    const std::vector<Dataset>& graphs, const std::vector<std::uint64_t>& seeds,
                    const GridOptions& opts);

/// Long-format CSV: one row per run.
void write_grid_csv(const GridReport& report, const std::filesystem::path& path, const GridOptions& opts,
                    const std::vector<std::string>& header = {});
/// Plain-text tables: best-per-task (mean +- std), accuracy distribution per
/// task, deltas between graph variants.
std::string render_grid_summary(const GridReport& report);
void write_timing_csv(const GridReport& report, const std::filesystem::path& path);

void write_loss_curve(const std::vector<EpochLog>& curve, const std::filesystem::path& path,
                      const std::vector<std::string>& header = {});

}  // namespace gssl
