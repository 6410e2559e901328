#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/rng.hpp"
#include "gssl/sampler.hpp"
#include "gssl/tensor.hpp"

namespace gssl {

enum class LayerKind { gcn, gat, rgcn, transgcn, rotategcn };
enum class Aggregator { conv, attn };
enum class Activation { identity, relu, tanh };

std::string_view layer_kind_name(LayerKind k);
std::string_view aggregator_name(Aggregator a);
std::optional<Activation> parse_activation(std::string_view s);

/// gcn/gat/rgcn read incoming edges only; trans/rotate read both directions.
Direction layer_direction(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::gcn;
  Aggregator aggregator = Aggregator::conv;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t num_bases = 8;
  Activation activation = Activation::relu;
};

/// Encoder family names as they appear in result tables: gcn, gat, rgcn,
/// transgcn-conv, transgcn-attn, rotategcn-conv, rotategcn-attn.
struct EncoderFamily {
  LayerKind kind;
  Aggregator aggregator;
};
std::optional<EncoderFamily> parse_encoder_family(std::string_view s);
std::string encoder_family_name(EncoderFamily f);

struct EncoderSpec {
  std::vector<LayerSpec> layers;
  double dropout = 0.0;
  std::uint64_t seed = 0;
};

/// Two layers in_dim -> hidden[0] -> hidden[1]; relu then identity.
EncoderSpec make_encoder_spec(EncoderFamily family, std::size_t in_dim,
                              std::vector<std::size_t> hidden, std::size_t num_bases,
                              double dropout, std::uint64_t seed);

/// Throws ConfigError describing the first inconsistency.
void validate_encoder_spec(const EncoderSpec& spec, std::size_t feature_dim,
                           std::size_t num_relations);

template <typename T>
struct LayerParams {
  ad::Tensor<T> weight;    // [in, out]; the self weight W_0 for rgcn
  ad::Tensor<T> att_src;   // [out, 1]
  ad::Tensor<T> att_dst;   // [out, 1]
  ad::Tensor<T> bases;     // rgcn [B, in*out]
  ad::Tensor<T> coeffs;    // rgcn [R, B]
  ad::Tensor<T> relation;  // transgcn [R, in]; rotategcn angles [R, in/2]

  std::vector<std::pair<std::string, ad::Tensor<T>>> named(const std::string& prefix) const;
};

/// rgcn clamps num_bases to the relation count.
template <typename T>
LayerParams<T> init_layer(const LayerSpec& spec, std::size_t num_relations, std::uint64_t seed);

/// One message-passing layer over `sub` with node states H [n, in_dim].
/// When `attention` is given and the layer attends, it receives the
/// per-message coefficients together with each message's target node.
template <typename T>
struct AttentionTrace {
  ad::Tensor<T> alpha;  // [messages, 1]
  ad::Index target;
  ad::Index source;     // source node of each message (the target itself for self)
};

template <typename T>
ad::Tensor<T> layer_forward(const LayerSpec& spec, const LayerParams<T>& p, const Subgraph& sub,
                            const ad::Tensor<T>& h, AttentionTrace<T>* attention = nullptr);

template <typename T>
class Encoder {
 public:
  Encoder(EncoderSpec spec, std::size_t num_relations);

  const EncoderSpec& spec() const { return spec_; }
  std::size_t out_dim() const { return spec_.layers.back().out_dim; }

  /// H [sub.num_nodes, out_dim] from X [sub.num_nodes, in_dim]. Dropout is
  /// applied before each layer only when `dropout_rng` is non-null.
  ad::Tensor<T> forward(const Subgraph& sub, const ad::Tensor<T>& x, Rng* dropout_rng = nullptr) const;

  std::vector<ad::Tensor<T>> parameters() const;
  std::vector<std::pair<std::string, ad::Tensor<T>>> named_parameters() const;
  std::vector<LayerParams<T>>& layers() { return params_; }

 private:
  EncoderSpec spec_;
  std::vector<LayerParams<T>> params_;
};

/// Applies the encoder to a sampled batch, gathering batch rows of the full
/// feature matrix. Returns embeddings for every batch node (seeds first).
template <typename T>
ad::Tensor<T> encode(const Encoder<T>& enc, const ad::Tensor<T>& features, const SampledBatch& batch,
                     Rng* dropout_rng = nullptr);

/// Full-graph inference: every node, every edge.
template <typename T>
ad::Tensor<T> encode_full(const Encoder<T>& enc, const KnowledgeGraph& g, const ad::Tensor<T>& features);

ad::Tensor<float> feature_tensor(const FeatureMatrix& m);
template <typename T>
ad::Tensor<T> cast_tensor(const ad::Tensor<float>& t);

}  // namespace gssl
