#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/graph_io.hpp"
#include "gssl/tensor.hpp"

namespace gssl {

/// Row-major embedding table indexed by NodeId.
struct EmbeddingView {
  std::span<const float> data;
  std::size_t dim = 0;

  static EmbeddingView of(const ad::Tensor<float>& t) { return {t.data(), t.cols()}; }
  static EmbeddingView of(const FeatureMatrix& m) { return {m.data(), m.dim()}; }
  std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

struct TypingResult {
  std::vector<NodeId> targets;
  std::vector<NodeId> predicted;  // type node per target
  std::vector<double> margin;     // top-1 minus top-2 cosine

  std::map<NodeId, NodeId> as_map() const;
};

double cosine(std::span<const float> a, std::span<const float> b);

/// Most cosine-similar type per target; ties and zero-norm targets resolve
/// to the lowest type NodeId. Throws InputError on an empty type set.
TypingResult assign_types(EmbeddingView h, std::span<const NodeId> targets,
                          std::span<const NodeId> types);

/// The k best types per target, best first (inspection only).
std::vector<std::vector<NodeId>> top_k_types(EmbeddingView h, std::span<const NodeId> targets,
                                             std::span<const NodeId> types, std::size_t k);

struct ClassMetrics {
  NodeId type = 0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MetricsReport {
  std::size_t n = 0;
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  std::vector<ClassMetrics> per_class;  // gold classes in NodeId order
};

/// Classes are the gold types. Precision of a class never predicted is 0.
/// Throws InputError when an assigned target has no gold entry.
MetricsReport compute_metrics(const TypingResult& result, const GoldStandard& gold);

/// Typing on raw features, bypassing any training.
MetricsReport baseline_typing(const FeatureMatrix& x, std::span<const NodeId> targets,
                              std::span<const NodeId> types, const GoldStandard& gold,
                              TypingResult* result = nullptr);

/// Row 0 = initially correct, row 1 = initially incorrect; column 0 =
/// finally correct. Percentages per row; an empty row stays all zero.
struct TransitionMatrix {
  std::array<std::array<std::size_t, 2>, 2> count{};
  std::array<std::array<double, 2>, 2> percent{};
};

/// Throws InputError when the two results cover different targets.
TransitionMatrix transition_matrix(const TypingResult& initial, const TypingResult& final,
                                   const GoldStandard& gold);

struct MeanStd {
  double mean = 0;
  double std = 0;  // population
};
MeanStd mean_std(std::span<const double> values);

void write_typing_tsv(const KnowledgeGraph& g, const TypingResult& r, const std::filesystem::path& path,
                      const std::vector<std::string>& header = {});
void write_transition_csv(const TransitionMatrix& m, const std::filesystem::path& path,
                          const std::vector<std::string>& header = {});
void write_metrics(const KnowledgeGraph& g, const MetricsReport& m, const std::filesystem::path& path,
                   const std::vector<std::string>& header = {});

}  // namespace gssl
