#include "gssl/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gssl/error.hpp"
#include "gssl/init.hpp"

namespace gssl {

using ad::Index;
using ad::Tensor;

std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::gcn: return "gcn";
    case LayerKind::gat: return "gat";
    case LayerKind::rgcn: return "rgcn";
    case LayerKind::transgcn: return "transgcn";
    case LayerKind::rotategcn: return "rotategcn";
  }
  return "?";
}

std::string_view aggregator_name(Aggregator a) { return a == Aggregator::conv ? "conv" : "attn"; }

std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "identity" || s == "none") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  return std::nullopt;
}

Direction layer_direction(LayerKind k) {
  return k == LayerKind::transgcn || k == LayerKind::rotategcn ? Direction::both : Direction::in;
}

std::optional<EncoderFamily> parse_encoder_family(std::string_view s) {
  if (s == "gcn") return EncoderFamily{LayerKind::gcn, Aggregator::conv};
  if (s == "gat") return EncoderFamily{LayerKind::gat, Aggregator::attn};
  if (s == "rgcn") return EncoderFamily{LayerKind::rgcn, Aggregator::conv};
  for (auto [prefix, kind] : {std::pair{std::string_view("transgcn"), LayerKind::transgcn},
                              std::pair{std::string_view("transegcn"), LayerKind::transgcn},
                              std::pair{std::string_view("rotategcn"), LayerKind::rotategcn}}) {
    if (s == std::string(prefix) + "-conv") return EncoderFamily{kind, Aggregator::conv};
    if (s == std::string(prefix) + "-attn") return EncoderFamily{kind, Aggregator::attn};
  }
  return std::nullopt;
}

std::string encoder_family_name(EncoderFamily f) {
  if (f.kind == LayerKind::transgcn || f.kind == LayerKind::rotategcn) {
    return std::string(layer_kind_name(f.kind)) + "-" + std::string(aggregator_name(f.aggregator));
  }
  return std::string(layer_kind_name(f.kind));
}

EncoderSpec make_encoder_spec(EncoderFamily family, std::size_t in_dim,
                              std::vector<std::size_t> hidden, std::size_t num_bases,
                              double dropout, std::uint64_t seed) {
  EncoderSpec spec;
  spec.dropout = dropout;
  spec.seed = seed;
  std::size_t prev = in_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    LayerSpec l;
    l.kind = family.kind;
    l.aggregator = family.aggregator;
    l.in_dim = prev;
    l.out_dim = hidden[i];
    l.num_bases = num_bases;
    l.activation = i + 1 == hidden.size() ? Activation::identity : Activation::relu;
    spec.layers.push_back(l);
    prev = hidden[i];
  }
  return spec;
}

void validate_encoder_spec(const EncoderSpec& spec, std::size_t feature_dim,
                           std::size_t num_relations) {
  if (spec.layers.size() != 2) {
    throw ConfigError("encoder must have exactly two layers, got " + std::to_string(spec.layers.size()));
  }
  if (spec.dropout < 0 || spec.dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  std::size_t prev = feature_dim;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto where = "layer " + std::to_string(i + 1) + ": ";
    if (l.in_dim != prev) {
      throw ConfigError(where + "input dim " + std::to_string(l.in_dim) + " does not match " +
                        std::to_string(prev));
    }
    if (l.out_dim == 0) throw ConfigError(where + "zero output dim");
    if (l.kind == LayerKind::rgcn && l.num_bases == 0) throw ConfigError(where + "num_bases must be >= 1");
    if (l.kind == LayerKind::rotategcn && l.in_dim % 2 != 0) {
      throw ConfigError(where + "rotategcn needs an even input dim, got " + std::to_string(l.in_dim));
    }
    if (l.kind == LayerKind::gcn && l.aggregator != Aggregator::conv) throw ConfigError(where + "gcn has no attention variant");
    if (l.kind == LayerKind::rgcn && l.aggregator != Aggregator::conv) throw ConfigError(where + "rgcn has no attention variant");
    if (l.kind == LayerKind::gat && l.aggregator != Aggregator::attn) throw ConfigError(where + "gat always attends");
    prev = l.out_dim;
  }
  if (num_relations == 0) {
    for (const auto& l : spec.layers) {
      if (l.kind == LayerKind::rgcn || l.kind == LayerKind::transgcn || l.kind == LayerKind::rotategcn) {
        throw ConfigError("relation-aware encoder on a graph without relations");
      }
    }
  }
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> LayerParams<T>::named(const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  auto push = [&](const char* name, const Tensor<T>& t) {
    if (t.defined()) out.emplace_back(prefix + "." + name, t);
  };
  push("weight", weight);
  push("att_src", att_src);
  push("att_dst", att_dst);
  push("bases", bases);
  push("coeffs", coeffs);
  push("relation", relation);
  return out;
}

template <typename T>
LayerParams<T> init_layer(const LayerSpec& spec, std::size_t num_relations, std::uint64_t seed) {
  using ad::InitScheme;
  LayerParams<T> p;
  p.weight = ad::seeded_init<T>({spec.in_dim, spec.out_dim}, InitScheme::glorot_uniform,
                                derive_seed(seed, "weight"));
  const bool attends = spec.kind == LayerKind::gat ||
                       (spec.aggregator == Aggregator::attn &&
                        (spec.kind == LayerKind::transgcn || spec.kind == LayerKind::rotategcn));
  if (attends) {
    p.att_src = ad::seeded_init<T>({spec.out_dim, 1}, InitScheme::glorot_uniform, derive_seed(seed, "att_src"));
    p.att_dst = ad::seeded_init<T>({spec.out_dim, 1}, InitScheme::glorot_uniform, derive_seed(seed, "att_dst"));
  }
  switch (spec.kind) {
    case LayerKind::rgcn: {
      const std::size_t nb = std::max<std::size_t>(1, std::min(spec.num_bases, num_relations));
      std::vector<T> data;
      data.reserve(nb * spec.in_dim * spec.out_dim);
      for (std::size_t b = 0; b < nb; ++b) {
        auto basis = ad::seeded_init<T>({spec.in_dim, spec.out_dim}, InitScheme::glorot_uniform,
                                        derive_seed(seed, "basis", b));
        data.insert(data.end(), basis.data().begin(), basis.data().end());
      }
      p.bases = Tensor<T>::from({nb, spec.in_dim * spec.out_dim}, std::move(data), true);
      p.coeffs = ad::seeded_init<T>({std::max<std::size_t>(1, num_relations), nb},
                                    InitScheme::glorot_uniform, derive_seed(seed, "coeffs"));
      break;
    }
    case LayerKind::transgcn:
      p.relation = ad::seeded_init<T>({std::max<std::size_t>(1, num_relations), spec.in_dim},
                                      InitScheme::glorot_uniform, derive_seed(seed, "relation"));
      break;
    case LayerKind::rotategcn:
      if (spec.in_dim % 2 != 0) throw ConfigError("rotategcn needs an even input dim");
      p.relation = ad::seeded_init<T>({std::max<std::size_t>(1, num_relations), spec.in_dim / 2},
                                      InitScheme::unit_phases, derive_seed(seed, "relation"));
      break;
    default:
      break;
  }
  return p;
}

namespace {

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Activation a) {
  switch (a) {
    case Activation::relu: return ad::relu(x);
    case Activation::tanh: return ad::tanh(x);
    case Activation::identity: break;
  }
  return x;
}

Index iota(std::size_t n) {
  Index idx(n);
  for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

void check_input(const LayerSpec& spec, const Subgraph& sub, std::size_t rows, std::size_t cols) {
  if (rows != sub.num_nodes) {
    throw std::invalid_argument(std::string(layer_kind_name(spec.kind)) + ": " + std::to_string(rows) +
                                " feature rows for " + std::to_string(sub.num_nodes) + " nodes");
  }
  if (cols != spec.in_dim) {
    throw std::invalid_argument(std::string(layer_kind_name(spec.kind)) + ": input dim " +
                                std::to_string(cols) + ", expected " + std::to_string(spec.in_dim));
  }
}

void check_relations(const Subgraph& sub, std::size_t num_relations) {
  for (auto r : sub.relation) {
    if (r >= num_relations) throw InputError("unknown relation handle " + std::to_string(r));
  }
}

// Softmax attention of transformed messages z toward their targets, scored
// against the target's own transformed state.
template <typename T>
Tensor<T> attend(const LayerParams<T>& p, const Tensor<T>& z, const Tensor<T>& z_self,
                 const Index& source, const Index& target, std::size_t n,
                 AttentionTrace<T>* trace) {
  auto s_src = ad::matmul(z, p.att_src);
  auto s_dst = ad::gather_rows(ad::matmul(z_self, p.att_dst), target);
  auto logits = ad::leaky_relu(ad::add(s_src, s_dst), T(0.2));
  auto alpha = ad::segment_softmax(logits, target, n);
  if (trace) *trace = {alpha, target, source};
  return ad::scatter_add_rows(ad::mul_col(z, alpha), target, n);
}

template <typename T>
Tensor<T> gcn(const LayerParams<T>& p, const Subgraph& sub, const Tensor<T>& h) {
  const std::size_t n = sub.num_nodes;
  std::vector<T> deg(n, T(1));
  for (auto v : sub.tail) deg[v] += T(1);
  Index src = iota(n), dst = iota(n);
  src.insert(src.end(), sub.head.begin(), sub.head.end());
  dst.insert(dst.end(), sub.tail.begin(), sub.tail.end());
  std::vector<T> coef(src.size());
  for (std::size_t m = 0; m < src.size(); ++m) coef[m] = T(1) / std::sqrt(deg[src[m]] * deg[dst[m]]);
  auto z = ad::matmul(h, p.weight);
  return ad::scatter_add_rows(ad::scale_rows(ad::gather_rows(z, src), std::span<const T>(coef)), dst, n);
}

template <typename T>
Tensor<T> gat(const LayerParams<T>& p, const Subgraph& sub, const Tensor<T>& h, AttentionTrace<T>* trace) {
  const std::size_t n = sub.num_nodes;
  Index src = iota(n), dst = iota(n);
  src.insert(src.end(), sub.head.begin(), sub.head.end());
  dst.insert(dst.end(), sub.tail.begin(), sub.tail.end());
  auto z = ad::matmul(h, p.weight);
  return attend(p, ad::gather_rows(z, src), z, src, dst, n, trace);
}

template <typename T>
Tensor<T> rgcn(const LayerSpec& spec, const LayerParams<T>& p, const Subgraph& sub, const Tensor<T>& h) {
  const std::size_t n = sub.num_nodes;
  const std::size_t num_rel = p.coeffs.rows();
  check_relations(sub, num_rel);
  auto out = ad::matmul(h, p.weight);
  if (sub.num_edges() == 0) return out;

  // c_{v,r}: in-degree of v restricted to relation r.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> count;
  std::vector<Index> src_by_rel(num_rel), dst_by_rel(num_rel);
  for (std::size_t e = 0; e < sub.num_edges(); ++e) {
    ++count[{sub.tail[e], sub.relation[e]}];
    src_by_rel[sub.relation[e]].push_back(sub.head[e]);
    dst_by_rel[sub.relation[e]].push_back(sub.tail[e]);
  }
  auto w_all = ad::matmul(p.coeffs, p.bases);  // [R, in*out]
  std::vector<Tensor<T>> messages;
  Index targets;
  for (std::uint32_t r = 0; r < num_rel; ++r) {
    if (src_by_rel[r].empty()) continue;
    auto w_r = ad::reshape(ad::gather_rows(w_all, Index{r}), {spec.in_dim, spec.out_dim});
    std::vector<T> coef;
    for (auto v : dst_by_rel[r]) coef.push_back(T(1) / static_cast<T>(count[{v, r}]));
    messages.push_back(ad::scale_rows(ad::matmul(ad::gather_rows(h, src_by_rel[r]), w_r),
                                      std::span<const T>(coef)));
    targets.insert(targets.end(), dst_by_rel[r].begin(), dst_by_rel[r].end());
  }
  return ad::add(out, ad::scatter_add_rows(ad::concat_rows(messages), targets, n));
}

// Shared by transgcn and rotategcn: self message plus one message per
// incoming edge (forward operator) and per outgoing edge (inverse operator).
template <typename T>
Tensor<T> bidirectional(const LayerSpec& spec, const LayerParams<T>& p, const Subgraph& sub,
                        const Tensor<T>& h, AttentionTrace<T>* trace) {
  const std::size_t n = sub.num_nodes;
  check_relations(sub, p.relation.rows());
  Tensor<T> incoming, outgoing;
  if (sub.num_edges() > 0) {
    auto h_head = ad::gather_rows(h, sub.head);
    auto h_tail = ad::gather_rows(h, sub.tail);
    auto rel = ad::gather_rows(p.relation, sub.relation);
    if (spec.kind == LayerKind::transgcn) {
      incoming = ad::add(h_head, rel);
      outgoing = ad::sub(h_tail, rel);
    } else {
      incoming = ad::complex_pair_rotate(h_head, rel);
      outgoing = ad::complex_pair_rotate(h_tail, ad::scale(rel, T(-1)));
    }
  }
  Index target = iota(n), source = iota(n);
  std::vector<Tensor<T>> parts{h};
  if (sub.num_edges() > 0) {
    parts.push_back(incoming);
    parts.push_back(outgoing);
    target.insert(target.end(), sub.tail.begin(), sub.tail.end());
    target.insert(target.end(), sub.head.begin(), sub.head.end());
    source.insert(source.end(), sub.head.begin(), sub.head.end());
    source.insert(source.end(), sub.tail.begin(), sub.tail.end());
  }
  auto z = ad::matmul(ad::concat_rows(parts), p.weight);
  if (spec.aggregator == Aggregator::attn) {
    auto z_self = ad::gather_rows(z, iota(n));
    return attend(p, z, z_self, source, target, n, trace);
  }
  std::vector<T> count(n, T(0));
  for (auto v : target) count[v] += T(1);
  std::vector<T> coef(target.size());
  for (std::size_t m = 0; m < target.size(); ++m) coef[m] = T(1) / count[target[m]];
  return ad::scatter_add_rows(ad::scale_rows(z, std::span<const T>(coef)), target, n);
}

}  // namespace

template <typename T>
Tensor<T> layer_forward(const LayerSpec& spec, const LayerParams<T>& p, const Subgraph& sub,
                        const Tensor<T>& h, AttentionTrace<T>* attention) {
  check_input(spec, sub, h.rows(), h.cols());
  Tensor<T> pre;
  switch (spec.kind) {
    case LayerKind::gcn: pre = gcn(p, sub, h); break;
    case LayerKind::gat: pre = gat(p, sub, h, attention); break;
    case LayerKind::rgcn: pre = rgcn(spec, p, sub, h); break;
    case LayerKind::transgcn:
    case LayerKind::rotategcn: pre = bidirectional(spec, p, sub, h, attention); break;
  }
  return activate(pre, spec.activation);
}

template <typename T>
Encoder<T>::Encoder(EncoderSpec spec, std::size_t num_relations) : spec_(std::move(spec)) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    params_.push_back(init_layer<T>(spec_.layers[i], num_relations, derive_seed(spec_.seed, "layer", i)));
  }
}

template <typename T>
Tensor<T> Encoder<T>::forward(const Subgraph& sub, const Tensor<T>& x, Rng* dropout_rng) const {
  Tensor<T> h = x;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (dropout_rng && spec_.dropout > 0) {
      const double keep = 1.0 - spec_.dropout;
      std::vector<T> mask(h.numel());
      for (auto& m : mask) m = uniform01(*dropout_rng) < keep ? static_cast<T>(1.0 / keep) : T(0);
      h = ad::mul_const(h, std::span<const T>(mask));
    }
    h = layer_forward(spec_.layers[i], params_[i], sub, h);
  }
  return h;
}

template <typename T>
std::vector<Tensor<T>> Encoder<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Encoder<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto part = params_[i].named("encoder.layer" + std::to_string(i + 1));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

template <typename T>
Tensor<T> encode(const Encoder<T>& enc, const Tensor<T>& features, const SampledBatch& batch,
                 Rng* dropout_rng) {
  Index rows(batch.nodes.begin(), batch.nodes.end());
  return enc.forward(batch.sub, ad::gather_rows(features, rows), dropout_rng);
}

template <typename T>
Tensor<T> encode_full(const Encoder<T>& enc, const KnowledgeGraph& g, const Tensor<T>& features) {
  return enc.forward(whole_graph(g), features, nullptr);
}

ad::Tensor<float> feature_tensor(const FeatureMatrix& m) {
  return ad::Tensor<float>::from({m.rows(), m.dim()}, m.data(), false);
}

template <typename T>
Tensor<T> cast_tensor(const ad::Tensor<float>& t) {
  std::vector<T> data(t.data().begin(), t.data().end());
  return Tensor<T>::from(t.shape(), std::move(data), false);
}

#define GSSL_INSTANTIATE(T)                                                                              \
  template struct LayerParams<T>;                                                                        \
  template LayerParams<T> init_layer(const LayerSpec&, std::size_t, std::uint64_t);                      \
  template Tensor<T> layer_forward(const LayerSpec&, const LayerParams<T>&, const Subgraph&,             \
                                   const Tensor<T>&, AttentionTrace<T>*);                                \
  template class Encoder<T>;                                                                             \
  template Tensor<T> encode(const Encoder<T>&, const Tensor<T>&, const SampledBatch&, Rng*);             \
  template Tensor<T> encode_full(const Encoder<T>&, const KnowledgeGraph&, const Tensor<T>&);            \
  template Tensor<T> cast_tensor(const ad::Tensor<float>&);

GSSL_INSTANTIATE(float)
GSSL_INSTANTIATE(double)

#undef GSSL_INSTANTIATE

}  // namespace gssl
