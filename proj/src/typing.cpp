#include "gssl/typing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "gssl/error.hpp"
#include "gssl/log.hpp"
#include "gssl/text.hpp"

namespace gssl {

std::map<NodeId, NodeId> TypingResult::as_map() const {
  std::map<NodeId, NodeId> m;
  for (std::size_t i = 0; i < targets.size(); ++i) m[targets[i]] = predicted[i];
  return m;
}

namespace {

double norm(std::span<const float> a) {
  double s = 0;
  for (float x : a) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

std::vector<NodeId> sorted_types(std::span<const NodeId> types) {
  if (types.empty()) throw InputError("typing needs at least one type node");
  std::vector<NodeId> t(types.begin(), types.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

void check_rows(EmbeddingView h, std::span<const NodeId> ids) {
  const std::size_t rows = h.dim ? h.data.size() / h.dim : 0;
  for (auto v : ids) {
    if (v >= rows) throw InputError("node " + std::to_string(v) + " has no embedding row");
  }
}

// Cosines of one target against every type (in type order).
std::vector<double> scores(EmbeddingView h, NodeId target, const std::vector<NodeId>& types,
                           const std::vector<double>& type_norms) {
  auto row = h.row(target);
  const double n = norm(row);
  std::vector<double> s(types.size(), 0.0);
  if (n == 0) return s;
  for (std::size_t j = 0; j < types.size(); ++j) {
    if (type_norms[j] > 0) s[j] = dot(row, h.row(types[j])) / (n * type_norms[j]);
  }
  return s;
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
  const double na = norm(a), nb = norm(b);
  return na == 0 || nb == 0 ? 0.0 : dot(a, b) / (na * nb);
}

TypingResult assign_types(EmbeddingView h, std::span<const NodeId> targets, std::span<const NodeId> types) {
  auto t = sorted_types(types);
  check_rows(h, targets);
  check_rows(h, t);
  std::vector<double> tn(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) tn[j] = norm(h.row(t[j]));
  TypingResult r;
  std::size_t zero_targets = 0;
  for (NodeId v : targets) {
    r.targets.push_back(v);
    if (norm(h.row(v)) == 0) {
      ++zero_targets;
      r.predicted.push_back(t.front());
      r.margin.push_back(0.0);
      continue;
    }
    auto s = scores(h, v, t, tn);
    std::size_t best = 0;
    for (std::size_t j = 1; j < s.size(); ++j) {
      if (s[j] > s[best]) best = j;  // strict: ties keep the lower NodeId
    }
    double second = -1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j != best) second = std::max(second, s[j]);
    }
    r.predicted.push_back(t[best]);
    r.margin.push_back(s.size() > 1 ? s[best] - second : s[best]);
  }
  if (zero_targets) {
    log::warn(std::to_string(zero_targets) + " target(s) with zero-norm embeddings assigned the lowest type id");
  }
  return r;
}

std::vector<std::vector<NodeId>> top_k_types(EmbeddingView h, std::span<const NodeId> targets,
                                             std::span<const NodeId> types, std::size_t k) {
  auto t = sorted_types(types);
  check_rows(h, targets);
  check_rows(h, t);
  std::vector<double> tn(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) tn[j] = norm(h.row(t[j]));
  std::vector<std::vector<NodeId>> out;
  for (NodeId v : targets) {
    auto s = scores(h, v, t, tn);
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
    std::vector<NodeId> best;
    for (std::size_t j = 0; j < std::min(k, order.size()); ++j) best.push_back(t[order[j]]);
    out.push_back(std::move(best));
  }
  return out;
}

MetricsReport compute_metrics(const TypingResult& result, const GoldStandard& gold) {
  std::map<NodeId, ClassMetrics> cls;
  for (const auto& [type, n] : gold.support) {
    if (n > 0) cls[type] = ClassMetrics{type, n, 0, 0, 0, 0, 0};
  }
  MetricsReport m;
  m.n = result.targets.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < result.targets.size(); ++i) {
    auto it = gold.type_of.find(result.targets[i]);
    if (it == gold.type_of.end()) {
      throw InputError("target " + std::to_string(result.targets[i]) + " missing from gold standard");
    }
    const NodeId pred = result.predicted[i];
    if (auto c = cls.find(pred); c != cls.end()) ++c->second.predicted;
    if (pred == it->second) {
      ++correct;
      ++cls[pred].correct;
    }
  }
  m.accuracy = m.n ? static_cast<double>(correct) / static_cast<double>(m.n) : 0.0;
  for (auto& [type, c] : cls) {
    c.precision = c.predicted ? static_cast<double>(c.correct) / static_cast<double>(c.predicted) : 0.0;
    c.recall = c.support ? static_cast<double>(c.correct) / static_cast<double>(c.support) : 0.0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    m.per_class.push_back(c);
  }
  if (!m.per_class.empty()) {
    const double k = static_cast<double>(m.per_class.size());
    for (const auto& c : m.per_class) {
      m.macro_precision += c.precision;
      m.macro_recall += c.recall;
      m.macro_f1 += c.f1;
    }
    m.macro_precision /= k;
    m.macro_recall /= k;
    m.macro_f1 /= k;
  }
  return m;
}

MetricsReport baseline_typing(const FeatureMatrix& x, std::span<const NodeId> targets,
                              std::span<const NodeId> types, const GoldStandard& gold,
                              TypingResult* result) {
  auto r = assign_types(EmbeddingView::of(x), targets, types);
  auto m = compute_metrics(r, gold);
  if (result) *result = std::move(r);
  return m;
}

TransitionMatrix transition_matrix(const TypingResult& initial, const TypingResult& final,
                                   const GoldStandard& gold) {
  auto a = initial.as_map();
  auto b = final.as_map();
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(), [](auto& x, auto& y) { return x.first == y.first; })) {
    throw InputError("transition matrix: initial and final results cover different targets");
  }
  TransitionMatrix m;
  for (const auto& [target, pred] : a) {
    auto g = gold.type_of.find(target);
    if (g == gold.type_of.end()) throw InputError("target " + std::to_string(target) + " missing from gold standard");
    const int row = pred == g->second ? 0 : 1;
    const int col = b.at(target) == g->second ? 0 : 1;
    ++m.count[row][col];
  }
  for (int r = 0; r < 2; ++r) {
    const double total = static_cast<double>(m.count[r][0] + m.count[r][1]);
    for (int c = 0; c < 2; ++c) m.percent[r][c] = total > 0 ? 100.0 * static_cast<double>(m.count[r][c]) / total : 0.0;
  }
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

namespace {

std::ofstream open_report(const std::filesystem::path& path, const std::vector<std::string>& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_typing_tsv(const KnowledgeGraph& g, const TypingResult& r, const std::filesystem::path& path,
                      const std::vector<std::string>& header) {
  auto out = open_report(path, header);
  for (std::size_t i = 0; i < r.targets.size(); ++i) {
    out << g.node_label(r.targets[i]) << '\t' << g.node_label(r.predicted[i]) << '\t' << fixed(r.margin[i], 6) << '\n';
  }
}

void write_transition_csv(const TransitionMatrix& m, const std::filesystem::path& path,
                          const std::vector<std::string>& header) {
  auto out = open_report(path, header);
  out << ",final_correct,final_incorrect\n";
  out << "initial_correct," << fixed(m.percent[0][0], 2) << ',' << fixed(m.percent[0][1], 2) << '\n';
  out << "initial_incorrect," << fixed(m.percent[1][0], 2) << ',' << fixed(m.percent[1][1], 2) << '\n';
}

void write_metrics(const KnowledgeGraph& g, const MetricsReport& m, const std::filesystem::path& path,
                   const std::vector<std::string>& header) {
  auto out = open_report(path, header);
  out << "class,support,predicted,correct,precision,recall,f1\n";
  for (const auto& c : m.per_class) {
    out << text::csv_field(g.node_label(c.type)) << ',' << c.support << ',' << c.predicted << ',' << c.correct << ','
        << fixed(c.precision, 6) << ',' << fixed(c.recall, 6) << ',' << fixed(c.f1, 6) << '\n';
  }
  out << "macro,," << m.n << ",," << fixed(m.macro_precision, 6) << ',' << fixed(m.macro_recall, 6) << ','
      << fixed(m.macro_f1, 6) << '\n';
  out << "accuracy,,,," << fixed(m.accuracy, 6) << ",,\n";
}

}  // namespace gssl
