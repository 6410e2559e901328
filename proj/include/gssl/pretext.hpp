#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gssl/encoders.hpp"
#include "gssl/sampler.hpp"
#include "gssl/tensor.hpp"

namespace gssl {

enum class Task { feature_rec, relation_rec, contrastive };
std::optional<Task> parse_task(std::string_view s);
std::string_view task_name(Task t);

enum class DecoderKind { mlp, gcn, gat, rgcn, transgcn, rotategcn, distmult, contrastive_scoring };
std::optional<DecoderKind> parse_decoder_kind(std::string_view s);
std::string_view decoder_kind_name(DecoderKind k);

/// The decoder a task uses unless configured otherwise.
DecoderKind default_decoder(Task t);
/// Throws ConfigError for a decoder the task cannot use.
void check_task_decoder(Task t, DecoderKind d);

struct DecoderSpec {
  DecoderKind kind = DecoderKind::mlp;
  Aggregator aggregator = Aggregator::conv;  // transgcn / rotategcn decoders
  std::vector<std::size_t> hidden;           // mlp hidden widths; empty = single linear map
  double tau = 0.5;
  std::size_t num_bases = 8;
};

// ---- losses -------------------------------------------------------------------

/// Mean over rows and columns of (xhat - x)^2.
template <typename T>
ad::Tensor<T> mse_loss(const ad::Tensor<T>& xhat, const ad::Tensor<T>& x);

/// sum_i h_i * r_i * t_i
double distmult_score(std::span<const double> h, std::span<const double> r, std::span<const double> t);

/// logits[e, k] = distmult(h_head[e], rel[k], h_tail[e]) for every relation k.
template <typename T>
ad::Tensor<T> distmult_logits(const ad::Tensor<T>& h_head, const ad::Tensor<T>& rel,
                              const ad::Tensor<T>& h_tail);

template <typename T>
struct RelationRecOutput {
  ad::Tensor<T> loss;
  double accuracy = 0;  // argmax == true relation, ties to the lowest index
};

/// |R|-way cross-entropy over the given edges (local ids into h).
/// Throws std::invalid_argument on an empty edge list.
template <typename T>
RelationRecOutput<T> relation_reconstruction_loss(const ad::Tensor<T>& h, const ad::Tensor<T>& rel,
                                                  const ad::Index& head, const ad::Index& relation,
                                                  const ad::Index& tail);

/// cos(a_i, b_j) / tau. Zero-norm rows score 0 (with a warning).
template <typename T>
ad::Tensor<T> contrastive_scoring(const ad::Tensor<T>& a, const ad::Tensor<T>& b, double tau);

struct InfoNceOptions {
  double tau = 0.5;
  bool inter_view_only = false;
  /// Rows that never serve as negatives (they still act as anchors).
  std::vector<bool> exclude_negative;
};

/// Symmetrized two-view InfoNCE with intra- and inter-view negatives.
/// Throws std::invalid_argument for fewer than two rows.
template <typename T>
ad::Tensor<T> infonce_loss(const ad::Tensor<T>& h1, const ad::Tensor<T>& h2, const InfoNceOptions& opts);

// ---- augmentation ---------------------------------------------------------------

struct AugmentSpec {
  double edge_drop_p = 0.2;
  double feature_mask_p = 0.2;
  std::uint64_t seed = 0;
};

struct AugmentedView {
  Subgraph sub;
  std::vector<std::uint32_t> masked_dims;  // ascending
  std::vector<float> dim_keep;             // 1 kept, 0 masked; length = feature dim
};

/// Drops each edge independently with edge_drop_p and zeroes
/// floor(feature_mask_p * dim) feature dimensions shared by all nodes.
AugmentedView augment_view(const Subgraph& sub, std::size_t feature_dim, const AugmentSpec& spec);

/// x with the view's masked columns zeroed.
template <typename T>
ad::Tensor<T> apply_feature_mask(const ad::Tensor<T>& x, const AugmentedView& view);

// ---- decoders ---------------------------------------------------------------------

template <typename T>
class Decoder {
 public:
  Decoder(DecoderSpec spec, std::size_t emb_dim, std::size_t feature_dim, std::size_t num_relations,
          std::uint64_t seed);

  const DecoderSpec& spec() const { return spec_; }

  /// Feature reconstruction X^ [n, feature_dim] from H [n, emb_dim].
  ad::Tensor<T> reconstruct(const Subgraph& sub, const ad::Tensor<T>& h) const;
  /// DistMult relation diagonals [R, emb_dim].
  const ad::Tensor<T>& relations() const { return relations_; }

  std::vector<std::pair<std::string, ad::Tensor<T>>> named_parameters() const;

 private:
  DecoderSpec spec_;
  std::vector<ad::Tensor<T>> weights_;  // mlp: W, b pairs
  std::optional<LayerSpec> layer_;
  LayerParams<T> layer_params_;
  ad::Tensor<T> relations_;
};

}  // namespace gssl
