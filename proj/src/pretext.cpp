#include "gssl/pretext.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gssl/error.hpp"
#include "gssl/init.hpp"
#include "gssl/log.hpp"
#include "gssl/rng.hpp"

namespace gssl {

using ad::Index;
using ad::Tensor;

std::optional<Task> parse_task(std::string_view s) {
  if (s == "feature-rec" || s == "feature_rec" || s == "feature-reconstruction") return Task::feature_rec;
  if (s == "relation-rec" || s == "relation_rec" || s == "relation-reconstruction") return Task::relation_rec;
  if (s == "contrastive") return Task::contrastive;
  return std::nullopt;
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::feature_rec: return "feature-rec";
    case Task::relation_rec: return "relation-rec";
    case Task::contrastive: return "contrastive";
  }
  return "?";
}

std::optional<DecoderKind> parse_decoder_kind(std::string_view s) {
  if (s == "mlp") return DecoderKind::mlp;
  if (s == "gcn") return DecoderKind::gcn;
  if (s == "gat") return DecoderKind::gat;
  if (s == "rgcn") return DecoderKind::rgcn;
  if (s == "transgcn" || s == "transegcn") return DecoderKind::transgcn;
  if (s == "rotategcn") return DecoderKind::rotategcn;
  if (s == "distmult") return DecoderKind::distmult;
  if (s == "contrastive-scoring") return DecoderKind::contrastive_scoring;
  return std::nullopt;
}

std::string_view decoder_kind_name(DecoderKind k) {
  switch (k) {
    case DecoderKind::mlp: return "mlp";
    case DecoderKind::gcn: return "gcn";
    case DecoderKind::gat: return "gat";
    case DecoderKind::rgcn: return "rgcn";
    case DecoderKind::transgcn: return "transgcn";
    case DecoderKind::rotategcn: return "rotategcn";
    case DecoderKind::distmult: return "distmult";
    case DecoderKind::contrastive_scoring: return "contrastive-scoring";
  }
  return "?";
}

DecoderKind default_decoder(Task t) {
  switch (t) {
    case Task::feature_rec: return DecoderKind::mlp;
    case Task::relation_rec: return DecoderKind::distmult;
    case Task::contrastive: return DecoderKind::contrastive_scoring;
  }
  return DecoderKind::mlp;
}

void check_task_decoder(Task t, DecoderKind d) {
  const bool ok = t == Task::relation_rec  ? d == DecoderKind::distmult
                  : t == Task::contrastive ? d == DecoderKind::contrastive_scoring
                                           : d != DecoderKind::distmult && d != DecoderKind::contrastive_scoring;
  if (!ok) {
    throw ConfigError("decoder '" + std::string(decoder_kind_name(d)) + "' cannot serve task '" +
                      std::string(task_name(t)) + "'");
  }
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& xhat, const Tensor<T>& x) {
  if (xhat.shape() != x.shape()) {
    throw std::invalid_argument("mse_loss: shape " + ad::shape_str(xhat.shape()) + " vs " +
                                ad::shape_str(x.shape()));
  }
  auto d = ad::sub(xhat, x);
  return ad::mean(ad::hadamard(d, d));
}

double distmult_score(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size()) throw std::invalid_argument("distmult_score: dim mismatch");
  double s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * r[i] * t[i];
  return s;
}

template <typename T>
Tensor<T> distmult_logits(const Tensor<T>& h_head, const Tensor<T>& rel, const Tensor<T>& h_tail) {
  if (rel.cols() != h_head.cols()) throw std::invalid_argument("distmult: relation dim differs from embedding dim");
  return ad::matmul(ad::hadamard(h_head, h_tail), ad::transpose(rel));
}

template <typename T>
RelationRecOutput<T> relation_reconstruction_loss(const Tensor<T>& h, const Tensor<T>& rel,
                                                  const Index& head, const Index& relation,
                                                  const Index& tail) {
  if (head.empty()) throw std::invalid_argument("relation_reconstruction_loss: empty edge batch");
  if (head.size() != relation.size() || head.size() != tail.size()) {
    throw std::invalid_argument("relation_reconstruction_loss: ragged edge lists");
  }
  for (auto r : relation) {
    if (r >= rel.rows()) throw InputError("relation handle " + std::to_string(r) + " has no decoder row");
  }
  auto logits = distmult_logits(ad::gather_rows(h, head), rel, ad::gather_rows(h, tail));
  auto logp = ad::log_softmax_rows(logits);
  RelationRecOutput<T> out;
  out.loss = ad::scale(ad::mean(ad::select_per_row(logp, relation)), T(-1));
  const std::size_t k = logits.cols();
  std::size_t correct = 0;
  for (std::size_t e = 0; e < head.size(); ++e) {
    const T* row = logits.data().data() + e * k;
    auto best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    if (best == relation[e]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(head.size());
  return out;
}

namespace {

template <typename T>
void warn_zero_rows(const Tensor<T>& a, const char* which) {
  const std::size_t m = a.cols();
  std::size_t zero = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    bool all = true;
    for (std::size_t j = 0; j < m && all; ++j) all = a.data()[i * m + j] == T(0);
    zero += all;
  }
  if (zero) log::warn(std::string("contrastive_scoring: ") + std::to_string(zero) + " zero-norm row(s) in " + which + "; scored as 0");
}

}  // namespace

template <typename T>
Tensor<T> contrastive_scoring(const Tensor<T>& a, const Tensor<T>& b, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("contrastive_scoring: tau must be > 0");
  if (a.cols() != b.cols()) throw std::invalid_argument("contrastive_scoring: dim mismatch");
  warn_zero_rows(a, "first view");
  if (a.node() != b.node()) warn_zero_rows(b, "second view");
  auto na = ad::l2_normalize_rows(a);
  auto nb = a.node() == b.node() ? na : ad::l2_normalize_rows(b);
  return ad::scale(ad::matmul(na, ad::transpose(nb)), static_cast<T>(1.0 / tau));
}

namespace {

// -log softmax at the positive column i of [S_cross | S_intra] for each
// anchor row i, with masked columns pushed to a vanishing weight.
template <typename T>
Tensor<T> one_direction(const Tensor<T>& cross, const Tensor<T>& intra, const InfoNceOptions& opts) {
  const std::size_t n = cross.rows();
  constexpr T kMasked = T(-1e30);
  Index diag(n);
  for (std::uint32_t i = 0; i < n; ++i) diag[i] = i;
  auto excluded = [&](std::size_t j) { return j < opts.exclude_negative.size() && opts.exclude_negative[j]; };
  Tensor<T> logits;
  const std::size_t width = opts.inter_view_only ? n : 2 * n;
  std::vector<T> offset(n * width, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && excluded(j)) offset[i * width + j] = kMasked;
      if (!opts.inter_view_only && (j == i || excluded(j))) offset[i * width + n + j] = kMasked;
    }
  }
  logits = opts.inter_view_only ? cross : ad::concat_cols(std::vector<Tensor<T>>{cross, intra});
  logits = ad::add(logits, Tensor<T>::from({n, width}, std::move(offset)));
  return ad::scale(ad::mean(ad::select_per_row(ad::log_softmax_rows(logits), diag)), T(-1));
}

}  // namespace

template <typename T>
Tensor<T> infonce_loss(const Tensor<T>& h1, const Tensor<T>& h2, const InfoNceOptions& opts) {
  if (h1.shape() != h2.shape()) throw std::invalid_argument("infonce_loss: views differ in shape");
  if (h1.rows() < 2) throw std::invalid_argument("infonce_loss: need at least two nodes for negatives");
  if (!(opts.tau > 0)) throw std::invalid_argument("infonce_loss: tau must be > 0");
  const T inv_tau = static_cast<T>(1.0 / opts.tau);
  auto z1 = ad::l2_normalize_rows(h1);
  auto z2 = ad::l2_normalize_rows(h2);
  auto s12 = ad::scale(ad::matmul(z1, ad::transpose(z2)), inv_tau);
  auto s21 = ad::transpose(s12);
  Tensor<T> s11, s22;
  if (!opts.inter_view_only) {
    s11 = ad::scale(ad::matmul(z1, ad::transpose(z1)), inv_tau);
    s22 = ad::scale(ad::matmul(z2, ad::transpose(z2)), inv_tau);
  }
  auto l1 = one_direction(s12, s11, opts);
  auto l2 = one_direction(s21, s22, opts);
  return ad::scale(ad::add(l1, l2), T(0.5));
}

AugmentedView augment_view(const Subgraph& sub, std::size_t feature_dim, const AugmentSpec& spec) {
  if (spec.edge_drop_p < 0 || spec.edge_drop_p > 1 || spec.feature_mask_p < 0 || spec.feature_mask_p > 1) {
    throw std::invalid_argument("augment_view: probabilities must lie in [0, 1]");
  }
  AugmentedView v;
  v.sub.num_nodes = sub.num_nodes;
  Rng edge_rng(derive_seed(spec.seed, "edge-drop"));
  for (std::size_t e = 0; e < sub.num_edges(); ++e) {
    if (uniform01(edge_rng) < spec.edge_drop_p) continue;
    v.sub.add(sub.head[e], sub.relation[e], sub.tail[e]);
  }
  const auto n_mask = static_cast<std::size_t>(std::floor(spec.feature_mask_p * static_cast<double>(feature_dim)));
  std::vector<std::uint32_t> dims(feature_dim);
  for (std::uint32_t i = 0; i < feature_dim; ++i) dims[i] = i;
  Rng mask_rng(derive_seed(spec.seed, "feature-mask"));
  for (std::size_t j = 0; j < n_mask; ++j) std::swap(dims[j], dims[j + uniform_index(mask_rng, feature_dim - j)]);
  v.masked_dims.assign(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(n_mask));
  std::sort(v.masked_dims.begin(), v.masked_dims.end());
  v.dim_keep.assign(feature_dim, 1.0f);
  for (auto d : v.masked_dims) v.dim_keep[d] = 0.0f;
  return v;
}

template <typename T>
Tensor<T> apply_feature_mask(const Tensor<T>& x, const AugmentedView& view) {
  if (x.cols() != view.dim_keep.size()) throw std::invalid_argument("apply_feature_mask: dim mismatch");
  std::vector<T> mask(x.numel());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) mask[i * x.cols() + j] = static_cast<T>(view.dim_keep[j]);
  return ad::mul_const(x, std::span<const T>(mask));
}

template <typename T>
Decoder<T>::Decoder(DecoderSpec spec, std::size_t emb_dim, std::size_t feature_dim,
                    std::size_t num_relations, std::uint64_t seed)
    : spec_(std::move(spec)) {
  using ad::InitScheme;
  switch (spec_.kind) {
    case DecoderKind::mlp: {
      std::size_t prev = emb_dim;
      std::vector<std::size_t> widths = spec_.hidden;
      widths.push_back(feature_dim);
      for (std::size_t i = 0; i < widths.size(); ++i) {
        weights_.push_back(ad::seeded_init<T>({prev, widths[i]}, InitScheme::glorot_uniform, derive_seed(seed, "mlp", i)));
        weights_.push_back(ad::seeded_init<T>({widths[i]}, InitScheme::zeros, 0));
        prev = widths[i];
      }
      break;
    }
    case DecoderKind::distmult:
      relations_ = ad::seeded_init<T>({std::max<std::size_t>(1, num_relations), emb_dim},
                                      InitScheme::glorot_uniform, derive_seed(seed, "distmult"));
      break;
    case DecoderKind::contrastive_scoring:
      break;
    default: {
      LayerSpec l;
      l.kind = spec_.kind == DecoderKind::gcn        ? LayerKind::gcn
               : spec_.kind == DecoderKind::gat      ? LayerKind::gat
               : spec_.kind == DecoderKind::rgcn     ? LayerKind::rgcn
               : spec_.kind == DecoderKind::transgcn ? LayerKind::transgcn
                                                     : LayerKind::rotategcn;
      l.aggregator = l.kind == LayerKind::gat ? Aggregator::attn
                     : (l.kind == LayerKind::transgcn || l.kind == LayerKind::rotategcn) ? spec_.aggregator
                                                                                         : Aggregator::conv;
      l.in_dim = emb_dim;
      l.out_dim = feature_dim;
      l.num_bases = spec_.num_bases;
      l.activation = Activation::identity;
      layer_ = l;
      layer_params_ = init_layer<T>(l, num_relations, derive_seed(seed, "decoder-layer"));
      break;
    }
  }
}

template <typename T>
Tensor<T> Decoder<T>::reconstruct(const Subgraph& sub, const Tensor<T>& h) const {
  if (spec_.kind == DecoderKind::mlp) {
    Tensor<T> x = h;
    for (std::size_t i = 0; i < weights_.size(); i += 2) {
      x = ad::add_row(ad::matmul(x, weights_[i]), weights_[i + 1]);
      if (i + 2 < weights_.size()) x = ad::relu(x);
    }
    return x;
  }
  if (!layer_) throw ConfigError("decoder '" + std::string(decoder_kind_name(spec_.kind)) + "' cannot reconstruct features");
  return layer_forward(*layer_, layer_params_, sub, h);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Decoder<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.emplace_back("decoder.mlp" + std::to_string(i / 2 + 1) + (i % 2 ? ".bias" : ".weight"), weights_[i]);
  }
  if (layer_) {
    auto part = layer_params_.named("decoder.layer");
    out.insert(out.end(), part.begin(), part.end());
  }
  if (relations_.defined()) out.emplace_back("decoder.relations", relations_);
  return out;
}

#define GSSL_INSTANTIATE(T)                                                                              \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> distmult_logits(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template RelationRecOutput<T> relation_reconstruction_loss(const Tensor<T>&, const Tensor<T>&,         \
                                                             const Index&, const Index&, const Index&);  \
  template Tensor<T> contrastive_scoring(const Tensor<T>&, const Tensor<T>&, double);                    \
  template Tensor<T> infonce_loss(const Tensor<T>&, const Tensor<T>&, const InfoNceOptions&);            \
  template Tensor<T> apply_feature_mask(const Tensor<T>&, const AugmentedView&);                         \
  template class Decoder<T>;

GSSL_INSTANTIATE(float)
GSSL_INSTANTIATE(double)

#undef GSSL_INSTANTIATE

}  // namespace gssl
