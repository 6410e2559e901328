#include "gssl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "gssl/error.hpp"
#include "gssl/rng.hpp"

namespace gssl {

std::vector<SchemaRelation> default_schema(std::size_t n_types, std::size_t n_relations) {
  std::vector<SchemaRelation> out;
  for (std::size_t k = 0; k < n_relations; ++k) {
    const std::size_t lap = (2 * k) / n_types;
    const std::size_t d = (2 * k + lap) % n_types;
    std::size_t r = (2 * k + 1 + lap) % n_types;
    if (r == d) r = (r + 1) % n_types;
    out.push_back({"rel" + std::to_string(k), d, r});
  }
  return out;
}

namespace {

void validate(const SyntheticSpec& s, const std::vector<SchemaRelation>& schema) {
  auto frac = [](double v) { return v >= 0 && v <= 1; };
  std::vector<std::string> bad;
  if (s.n_types < 2) bad.push_back("n_types must be >= 2");
  if (s.terms_per_type < 2) bad.push_back("terms_per_type must be >= 2");
  if (s.feature_dim == 0 || s.feature_dim % 2) bad.push_back("feature_dim must be a positive even number");
  if (!frac(s.type_link_frac)) bad.push_back("type_link_frac must be in [0,1]");
  if (!frac(s.corruption.edge_drop_frac)) bad.push_back("edge_drop_frac must be in [0,1]");
  if (!frac(s.corruption.spurious_frac)) bad.push_back("spurious_frac must be in [0,1]");
  if (!frac(s.corruption.fragment_frac)) bad.push_back("fragment_frac must be in [0,1]");
  if (s.corruption.feature_noise_sigma < 0) bad.push_back("feature_noise_sigma must be >= 0");
  if (s.term_noise_sigma < 0) bad.push_back("term_noise_sigma must be >= 0");
  if (s.edges_per_relation_term < 0) bad.push_back("edges_per_relation_term must be >= 0");
  if (schema.empty()) bad.push_back("at least one relation is required");
  for (const auto& r : schema) {
    if (r.domain >= s.n_types || r.range >= s.n_types) bad.push_back("relation " + r.name + " references an unknown type");
  }
  if (!bad.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
}

std::vector<float> unit_gaussian(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double n = 0;
  for (auto& x : v) {
    x = static_cast<float>(normal01(rng));
    n += static_cast<double>(x) * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x = static_cast<float>(x / n);
  return v;
}

}  // namespace

SyntheticPair generate_synthetic(const SyntheticSpec& spec) {
  auto schema = spec.relations.empty() ? default_schema(spec.n_types, spec.n_relations) : spec.relations;
  validate(spec, schema);
  const std::size_t T = spec.n_types, P = spec.terms_per_type, d = spec.feature_dim;

  SyntheticPair out;
  out.schema = schema;
  KnowledgeGraph g;
  for (std::size_t t = 0; t < T; ++t) {
    g.add_node("type " + std::to_string(t), NodeRole::type);
    out.type_of_node.push_back(t);
  }
  // term_ids[t][i] = NodeId of term i of type t
  std::vector<std::vector<NodeId>> term_ids(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < P; ++i) {
      term_ids[t].push_back(g.add_node("term " + std::to_string(t) + "." + std::to_string(i), NodeRole::term));
      out.type_of_node.push_back(t);
      out.gold.type_of[term_ids[t].back()] = static_cast<NodeId>(t);
    }
    out.gold.support[static_cast<NodeId>(t)] = P;
  }
  for (const auto& r : schema) g.add_relation(r.name);
  const bool links = spec.type_link_frac > 0;
  if (links) g.add_relation(std::string(kTypeLink));

  Rng rng(derive_seed(spec.seed, "synth-edges"));
  // endpoint pool per type: its terms, plus the type node itself when enabled
  std::vector<std::vector<NodeId>> pool = term_ids;
  if (spec.types_in_schema) {
    for (std::size_t t = 0; t < T; ++t) pool[t].push_back(static_cast<NodeId>(t));
  }
  const auto per_rel = static_cast<std::size_t>(std::llround(spec.edges_per_relation_term * static_cast<double>(P)));
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto& rel = schema[k];
    const std::size_t nd = pool[rel.domain].size(), nr = pool[rel.range].size();
    const std::size_t capacity = rel.domain == rel.range ? nd * (nd - 1) : nd * nr;
    if (per_rel > capacity) {
      throw ConfigError("density unsatisfiable: relation " + rel.name + " needs " + std::to_string(per_rel) +
                        " distinct edges but its schema admits " + std::to_string(capacity));
    }
    std::size_t added = 0;
    while (added < per_rel) {
      NodeId h = pool[rel.domain][uniform_index(rng, nd)];
      NodeId t = pool[rel.range][uniform_index(rng, nr)];
      if (h == t) continue;
      added += g.add_edge(Triple{h, static_cast<RelationId>(k), t, std::nullopt});
    }
  }
  if (links) {
    const auto link_rel = static_cast<RelationId>(schema.size());
    const auto n_link = static_cast<std::size_t>(std::llround(spec.type_link_frac * static_cast<double>(P)));
    for (std::size_t t = 0; t < T; ++t) {
      auto ids = term_ids[t];
      for (std::size_t j = 0; j < n_link; ++j) std::swap(ids[j], ids[j + uniform_index(rng, P - j)]);
      for (std::size_t j = 0; j < n_link; ++j) g.add_edge(Triple{ids[j], link_rel, static_cast<NodeId>(t), std::nullopt});
    }
  }

  Rng feat_rng(derive_seed(spec.seed, "synth-features"));
  std::vector<std::vector<float>> centroid(T);
  for (auto& c : centroid) c = unit_gaussian(feat_rng, d);
  FeatureMatrix x(g.num_nodes(), d);
  const double scale = spec.term_noise_sigma / std::sqrt(static_cast<double>(d));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto& c = centroid[out.type_of_node[v]];
    auto row = x.row(v);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = g.role(v) == NodeRole::type ? c[j] : static_cast<float>(c[j] + scale * normal01(feat_rng));
    }
  }
  g.set_node_features(x);
  out.clean = g;

  // Corrupted copy: same nodes and relation vocabulary; edges dropped,
  // fragmented and polluted; features optionally perturbed.
  const auto& cor = spec.corruption;
  Rng crng(derive_seed(spec.seed, "synth-corruption"));
  const std::size_t m = g.num_edges();
  std::vector<bool> keep(m, true);
  {
    const auto n_drop = static_cast<std::size_t>(std::floor(cor.edge_drop_frac * static_cast<double>(m)));
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    for (std::size_t j = 0; j < n_drop; ++j) std::swap(idx[j], idx[j + uniform_index(crng, m - j)]);
    for (std::size_t j = 0; j < n_drop; ++j) keep[idx[j]] = false;
  }
  {
    std::vector<NodeId> terms;
    for (const auto& ids : term_ids) terms.insert(terms.end(), ids.begin(), ids.end());
    const auto n_frag = static_cast<std::size_t>(std::floor(cor.fragment_frac * static_cast<double>(terms.size())));
    for (std::size_t j = 0; j < n_frag; ++j) std::swap(terms[j], terms[j + uniform_index(crng, terms.size() - j)]);
    std::set<NodeId> stripped(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n_frag));
    for (std::size_t i = 0; i < m; ++i) {
      const auto& e = g.edges()[i];
      if (stripped.contains(e.head) || stripped.contains(e.tail)) keep[i] = false;
    }
  }
  KnowledgeGraph c;
  for (NodeId v = 0; v < g.num_nodes(); ++v) c.add_node(g.node_label(v), g.role(v));
  for (const auto& r : g.relation_labels()) c.add_relation(r);
  for (std::size_t i = 0; i < m; ++i) {
    if (keep[i]) c.add_edge(g.edges()[i]);
  }
  const auto n_spurious = static_cast<std::size_t>(std::llround(cor.spurious_frac * static_cast<double>(m)));
  std::size_t spurious = 0, attempts = 0;
  while (spurious < n_spurious) {
    if (++attempts > 1000 * (n_spurious + 1)) throw ConfigError("could not place the requested spurious edges");
    const auto k = uniform_index(crng, schema.size());
    const auto ht = uniform_index(crng, T), tt = uniform_index(crng, T);
    if (ht == schema[k].domain || tt == schema[k].range) continue;
    NodeId h = term_ids[ht][uniform_index(crng, P)];
    NodeId t = term_ids[tt][uniform_index(crng, P)];
    if (h == t || g.has_edge(h, static_cast<RelationId>(k), t)) continue;
    spurious += c.add_edge(Triple{h, static_cast<RelationId>(k), t, std::nullopt});
  }
  FeatureMatrix xc = x;
  if (cor.feature_noise_sigma > 0) {
    Rng nrng(derive_seed(spec.seed, "synth-feature-noise"));
    const double s = cor.feature_noise_sigma / std::sqrt(static_cast<double>(d));
    for (NodeId v = 0; v < c.num_nodes(); ++v) {
      if (c.role(v) == NodeRole::type) continue;
      for (auto& val : xc.row(v)) val = static_cast<float>(val + s * normal01(nrng));
    }
  }
  c.set_node_features(std::move(xc));
  out.corrupted = std::move(c);
  return out;
}

double schema_consistency(const KnowledgeGraph& g, const std::vector<SchemaRelation>& schema,
                          const std::vector<std::size_t>& type_of_node) {
  std::size_t total = 0, ok = 0;
  for (const auto& e : g.edges()) {
    if (e.relation >= schema.size()) continue;
    ++total;
    const auto& r = schema[e.relation];
    ok += type_of_node.at(e.head) == r.domain && type_of_node.at(e.tail) == r.range;
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
}

void write_synthetic(const SyntheticPair& pair, const std::filesystem::path& dir,
                     const std::vector<std::string>& header) {
  for (auto [name, g] : {std::pair{"clean", &pair.clean}, std::pair{"corrupted", &pair.corrupted}}) {
    const auto sub = dir / name;
    std::filesystem::create_directories(sub);
    save_triples(*g, sub / "triples.tsv", header);
    save_features(*g, sub / "features.ntdf", sub / "index.tsv");
    save_roles(*g, sub / "roles.tsv");
    save_gold(*g, pair.gold, sub / "gold.tsv");
  }
  std::ofstream out(dir / "schema.tsv");
  if (!out) throw InputError("cannot write " + (dir / "schema.tsv").string());
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& r : pair.schema) {
    out << r.name << '\t' << pair.clean.node_label(static_cast<NodeId>(r.domain)) << '\t'
        << pair.clean.node_label(static_cast<NodeId>(r.range)) << '\n';
  }
}

}  // namespace gssl
