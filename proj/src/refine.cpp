#include "gssl/refine.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "gssl/error.hpp"
#include "gssl/graph_io.hpp"
#include "gssl/log.hpp"
#include "gssl/text.hpp"

namespace gssl {

namespace {

constexpr std::string_view kRuleWithoutOf = "isa-without-of";
constexpr std::string_view kRuleWithOf = "isa-with-of";
constexpr std::size_t kCleanChunk = 256;

std::vector<std::string> tokens_of(std::string_view term) {
  return text::split_whitespace(text::normalize_label(term));
}

std::vector<LabelTriple> chain(const std::vector<std::string>& tok) {
  // Emitted shortest-first: (w_{n-1} w_n, is-a, w_n), ..., (w_1..w_n, is-a, w_2..w_n).
  std::vector<LabelTriple> out;
  const std::size_t n = tok.size();
  for (std::size_t k = n - 1; k-- > 0;) {
    out.push_back({text::join(tok, " ", k), std::string(kIsA), text::join(tok, " ", k + 1)});
  }
  return out;
}

}  // namespace

std::vector<LabelTriple> derive_isa_without_of(std::string_view term) {
  auto tok = tokens_of(term);
  if (tok.empty()) throw std::invalid_argument("derive_isa_without_of: empty term");
  if (tok.size() == 1) return {};
  return chain(tok);
}

std::vector<LabelTriple> derive_isa_with_of(std::string_view term) {
  auto tok = tokens_of(term);
  if (tok.empty()) throw std::invalid_argument("derive_isa_with_of: empty term");
  auto of = std::find(tok.begin(), tok.end(), "of");
  if (of == tok.end()) return derive_isa_without_of(term);
  if (of == tok.begin() || tok.back() == "of") {
    log::warn("is-a rule skipped for degenerate term '" + std::string(term) + "'");
    return {};
  }
  std::vector<std::string> head(tok.begin(), of);
  std::vector<LabelTriple> out;
  out.push_back({text::join(tok, " "), std::string(kIsA), text::join(head, " ")});
  if (head.size() > 1) {
    auto sub = chain(head);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::vector<LabelTriple> derive_isa(std::string_view term) {
  auto tok = tokens_of(term);
  if (std::find(tok.begin(), tok.end(), "of") != tok.end()) return derive_isa_with_of(term);
  return derive_isa_without_of(term);
}

void RefinementLog::append(const RefinementLog& later) {
  added.insert(added.end(), later.added.begin(), later.added.end());
  removed.insert(removed.end(), later.removed.begin(), later.removed.end());
  if (!stats_before) stats_before = later.stats_before;
  if (later.stats_after) stats_after = later.stats_after;
}

FeatureProvider FeatureProvider::from_files(const std::filesystem::path& features,
                                            const std::filesystem::path& index) {
  auto raw = read_feature_file(features);
  auto idx = read_index_file(index, true);
  FeatureProvider p;
  for (const auto& [label, row] : idx) {
    if (row >= raw.rows()) throw InputError("supplementary index row out of range: " + label);
    auto r = raw.row(row);
    p.rows_[label] = std::vector<float>(r.begin(), r.end());
  }
  return p;
}

void FeatureProvider::add(const std::string& label, std::vector<float> row) {
  rows_[text::normalize_label(label)] = std::move(row);
}

std::vector<float> FeatureProvider::row_for(const std::string& label, std::size_t dim) const {
  auto it = rows_.find(text::normalize_label(label));
  if (it != rows_.end()) {
    if (it->second.size() != dim) {
      throw InputError("supplementary feature for '" + label + "' has dim " +
                       std::to_string(it->second.size()) + ", expected " + std::to_string(dim));
    }
    return it->second;
  }
  if (zero_init_) return std::vector<float>(dim, 0.0f);
  throw InputError("no feature row for enrichment node '" + label +
                   "' (supply a feature file or enable zero-init)");
}

Refined enrich(const KnowledgeGraph& g, const FeatureProvider& provider) {
  Refined result{g, {}};
  KnowledgeGraph& out = result.graph;
  result.log.stats_before = topology_stats(g);

  std::unordered_map<std::string, NodeId> by_normalized;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    by_normalized.emplace(text::normalize_label(g.node_label(v)), v);
  }

  const bool with_features = g.has_node_features();
  const std::size_t dim = with_features ? g.node_features().dim() : 0;
  std::vector<float> feats = with_features ? g.node_features().data() : std::vector<float>{};
  std::optional<RelationId> isa;

  auto resolve = [&](const std::string& label) -> NodeId {
    if (auto it = by_normalized.find(label); it != by_normalized.end()) return it->second;
    if (auto existing = out.find_node(label)) return *existing;
    NodeId v = out.add_node(label, NodeRole::other);
    by_normalized.emplace(label, v);
    if (with_features) {
      auto row = provider.row_for(label, dim);
      feats.insert(feats.end(), row.begin(), row.end());
    }
    return v;
  };

  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.role(v) == NodeRole::type) continue;
    const auto& label = g.node_label(v);
    if (text::trim(label).empty()) continue;
    auto tok = tokens_of(label);
    const bool has_of = std::find(tok.begin(), tok.end(), "of") != tok.end();
    auto derived = has_of ? derive_isa_with_of(label) : derive_isa_without_of(label);
    const auto full = text::normalize_label(label);
    for (const auto& d : derived) {
      if (!isa) isa = out.add_relation(std::string(kIsA));
      NodeId head = d.head == full ? v : resolve(d.head);
      NodeId tail = resolve(d.tail);
      if (out.add_edge(Triple{head, *isa, tail, std::nullopt})) {
        result.log.added.push_back(
            {{out.node_label(head), std::string(kIsA), out.node_label(tail)},
             std::string(has_of && d.head == full ? kRuleWithOf : kRuleWithoutOf),
             std::nullopt});
      }
    }
  }

  if (with_features) {
    out.set_node_features(FeatureMatrix(out.num_nodes(), dim, std::move(feats)));
  }
  if (!g.relation_features().empty() && out.num_relations() != g.num_relations()) {
    // The is-a relation is new; give it a zero row so the matrix stays aligned.
    std::vector<float> rel = g.relation_features().data();
    rel.resize(out.num_relations() * g.relation_features().dim(), 0.0f);
    out.set_relation_features(
        FeatureMatrix(out.num_relations(), g.relation_features().dim(), std::move(rel)));
  }
  result.log.stats_after = topology_stats(out);
  return result;
}

namespace {

KnowledgeGraph rebuild_without(const KnowledgeGraph& g, const std::vector<bool>& drop_edge) {
  std::vector<std::size_t> deg_after(g.num_nodes(), 0);
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    if (drop_edge[i]) continue;
    ++deg_after[g.edges()[i].head];
    ++deg_after[g.edges()[i].tail];
  }
  KnowledgeGraph out;
  for (const auto& r : g.relation_labels()) out.add_relation(r);
  std::vector<NodeId> remap(g.num_nodes(), static_cast<NodeId>(-1));
  std::vector<NodeId> kept;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const bool became_isolated = g.degree(v) > 0 && deg_after[v] == 0;
    if (became_isolated && g.role(v) == NodeRole::other) continue;
    remap[v] = out.add_node(g.node_label(v), g.role(v));
    kept.push_back(v);
  }
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    if (drop_edge[i]) continue;
    const auto& e = g.edges()[i];
    out.add_edge(Triple{remap[e.head], e.relation, remap[e.tail], e.sentence_id});
  }
  if (g.has_node_features()) out.set_node_features(g.node_features().select_rows(kept));
  if (!g.relation_features().empty()) out.set_relation_features(g.relation_features());
  return out;
}

}  // namespace

Refined clean(const KnowledgeGraph& g, Validator& validator,
              const std::unordered_map<std::string, std::string>& sentences) {
  RefinementLog log;
  log.stats_before = topology_stats(g);
  std::vector<bool> drop(g.num_edges(), false);

  std::vector<TripleText> batch;
  for (std::size_t start = 0; start < g.num_edges(); start += kCleanChunk) {
    const std::size_t end = std::min(g.num_edges(), start + kCleanChunk);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) {
      const auto& e = g.edges()[i];
      std::string sentence;
      if (e.sentence_id) {
        if (auto it = sentences.find(*e.sentence_id); it != sentences.end()) sentence = it->second;
      }
      batch.push_back({g.node_label(e.head), g.relation_label(e.relation), g.node_label(e.tail),
                       std::move(sentence)});
    }
    std::vector<int> verdicts;
    try {
      verdicts = validator.validate(batch);
    } catch (const std::exception& ex) {
      throw CleanAborted(std::string("cleaning aborted at edge ") + std::to_string(start) + ": " +
                             ex.what(),
                         log);
    }
    if (verdicts.size() != batch.size()) {
      throw CleanAborted("validator returned a misaligned verdict list", log);
    }
    for (std::size_t i = start; i < end; ++i) {
      if (verdicts[i - start] != 0) continue;
      drop[i] = true;
      const auto& t = batch[i - start];
      log.removed.push_back({{t.head, t.relation, t.tail}, validator.tag(), 0});
    }
  }

  Refined result{rebuild_without(g, drop), std::move(log)};
  if (result.graph.num_nodes() > 0) result.log.stats_after = topology_stats(result.graph);
  return result;
}

Refined combined_refine(const KnowledgeGraph& g, Validator& validator,
                        const FeatureProvider& provider,
                        const std::unordered_map<std::string, std::string>& sentences) {
  auto enriched = enrich(g, provider);
  RefinementLog log = enriched.log;
  try {
    auto cleaned = clean(enriched.graph, validator, sentences);
    log.append(cleaned.log);
    log.stats_before = enriched.log.stats_before;
    return {std::move(cleaned.graph), std::move(log)};
  } catch (const CleanAborted& e) {
    log.append(e.partial_log());
    log.stats_before = enriched.log.stats_before;
    throw CleanAborted(e.what(), std::move(log));
  }
}

namespace {

nlohmann::json stats_json(const TopologyStats& s) {
  return {{"nodes", s.n_nodes},     {"edges", s.n_edges},     {"relations", s.n_relations},
          {"n_comp", s.n_comp},     {"r_giant", s.r_giant},   {"avg_deg", s.avg_deg}};
}

}  // namespace

void write_log_jsonl(const RefinementLog& log, const std::filesystem::path& path,
                     const std::vector<std::string>& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& h : header) out << nlohmann::json{{"provenance", h}}.dump() << '\n';
  for (const auto& a : log.added) {
    out << nlohmann::json{{"action", "added"},
                          {"head", a.triple.head},
                          {"relation", a.triple.relation},
                          {"tail", a.triple.tail},
                          {"rule", a.tag}}
               .dump()
        << '\n';
  }
  for (const auto& r : log.removed) {
    out << nlohmann::json{{"action", "removed"},
                          {"head", r.triple.head},
                          {"relation", r.triple.relation},
                          {"tail", r.triple.tail},
                          {"verdict", r.verdict.value_or(0)},
                          {"validator", r.tag}}
               .dump()
        << '\n';
  }
  if (log.stats_before) {
    out << nlohmann::json{{"action", "stats"}, {"stage", "before"}, {"stats", stats_json(*log.stats_before)}}
               .dump()
        << '\n';
  }
  if (log.stats_after) {
    out << nlohmann::json{{"action", "stats"}, {"stage", "after"}, {"stats", stats_json(*log.stats_after)}}
               .dump()
        << '\n';
  }
}

}  // namespace gssl
