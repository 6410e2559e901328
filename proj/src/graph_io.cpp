#include "gssl/graph_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "gssl/binio.hpp"
#include "gssl/error.hpp"
#include "gssl/text.hpp"

namespace gssl {

namespace {

constexpr char kFeatureMagic[4] = {'N', 'T', 'D', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#' || text::trim(line).empty();
}

std::string label_form(const std::string& s, bool normalize) {
  return normalize ? text::normalize_label(s) : s;
}

FeatureMatrix bind_rows(const FeatureMatrix& raw,
                        const std::unordered_map<std::string, std::size_t>& index,
                        const std::vector<std::string>& labels, bool normalize,
                        const char* what) {
  FeatureMatrix out(labels.size(), raw.dim());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = index.find(label_form(labels[i], normalize));
    if (it == index.end()) {
      throw InputError(std::string(what) + " features: no row for '" + labels[i] + "'");
    }
    if (it->second >= raw.rows()) {
      throw InputError(std::string(what) + " features: index row " + std::to_string(it->second) +
                       " out of range for '" + labels[i] + "'");
    }
    auto src = raw.row(it->second);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

NodeId require_node(const KnowledgeGraph& g, const std::string& label, const fs::path& path,
                    std::size_t line) {
  auto v = g.find_node(label);
  if (!v) throw ParseError(path.string(), line, "unknown node label '" + label + "'");
  return *v;
}

}  // namespace

KnowledgeGraph load_triples(const fs::path& path, bool normalize) {
  auto in = open_in(path);
  KnowledgeGraph g;
  std::string line;
  std::size_t lineno = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() < 3) {
      throw ParseError(path.string(), lineno,
                       "expected at least 3 tab-separated columns, got " +
                           std::to_string(cols.size()));
    }
    auto head = label_form(cols[0], normalize);
    auto rel = label_form(cols[1], normalize);
    auto tail = label_form(cols[2], normalize);
    if (head.empty() || rel.empty() || tail.empty()) {
      throw ParseError(path.string(), lineno, "empty label");
    }
    Triple t;
    t.head = g.add_node(std::move(head));
    t.relation = g.add_relation(std::move(rel));
    t.tail = g.add_node(std::move(tail));
    if (cols.size() >= 4 && !cols[3].empty()) t.sentence_id = cols[3];
    g.add_edge(std::move(t));
    ++rows;
  }
  if (rows == 0) throw InputError(path.string() + ": no triples");
  return g;
}

void save_triples(const KnowledgeGraph& g, const fs::path& path,
                  const std::vector<std::string>& header) {
  auto out = open_out(path);
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& e : g.edges()) {
    out << g.node_label(e.head) << '\t' << g.relation_label(e.relation) << '\t'
        << g.node_label(e.tail);
    if (e.sentence_id) out << '\t' << *e.sentence_id;
    out << '\n';
  }
}

FeatureMatrix read_feature_file(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw InputError(path.string() + ": not an NTDF feature file");
  }
  const std::string where = path.string() + " (feature file)";
  auto version = binio::get_le<std::uint32_t>(in, where);
  if (version != kFeatureVersion) {
    throw InputError(path.string() + ": unsupported feature file version " +
                     std::to_string(version));
  }
  auto rows = binio::get_le<std::uint64_t>(in, where);
  auto dim = binio::get_le<std::uint32_t>(in, where);
  if (dim == 0) throw InputError(path.string() + ": zero feature dimension");
  std::vector<float> data;
  data.reserve(rows * dim);
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      float v = binio::get_le<float>(in, where);
      if (!std::isfinite(v)) {
        throw InputError(path.string() + ": non-finite value in row " + std::to_string(r));
      }
      data.push_back(v);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path.string() + ": trailing bytes after " + std::to_string(rows) +
                     " rows of dim " + std::to_string(dim));
  }
  return FeatureMatrix(rows, dim, std::move(data));
}

void write_feature_file(const FeatureMatrix& m, const fs::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kFeatureMagic, 4);
  binio::put_le<std::uint32_t>(out, kFeatureVersion);
  binio::put_le<std::uint64_t>(out, m.rows());
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) binio::put_le<float>(out, v);
}

std::unordered_map<std::string, std::size_t> read_index_file(const fs::path& path,
                                                             bool normalize) {
  auto in = open_in(path);
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() < 2) throw ParseError(path.string(), lineno, "expected row_index<TAB>label");
    std::size_t row = 0;
    try {
      std::size_t used = 0;
      row = std::stoull(cols[0], &used);
      if (used != cols[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(path.string(), lineno, "bad row index '" + cols[0] + "'");
    }
    index.emplace(label_form(cols[1], normalize), row);
  }
  return index;
}

void write_index_file(const std::vector<std::string>& labels, const fs::path& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << '\t' << labels[i] << '\n';
}

FeatureMatrix load_features(const fs::path& features, const fs::path& index,
                            const KnowledgeGraph& g, bool normalize) {
  auto raw = read_feature_file(features);
  auto idx = read_index_file(index, normalize);
  return bind_rows(raw, idx, g.node_labels(), normalize, "node");
}

FeatureMatrix load_relation_features(const fs::path& features, const fs::path& index,
                                     const KnowledgeGraph& g, bool normalize) {
  auto raw = read_feature_file(features);
  auto idx = read_index_file(index, normalize);
  return bind_rows(raw, idx, g.relation_labels(), normalize, "relation");
}

void save_features(const KnowledgeGraph& g, const fs::path& features, const fs::path& index) {
  write_feature_file(g.node_features(), features);
  write_index_file(g.node_labels(), index);
}

void load_roles(const fs::path& path, KnowledgeGraph& g, bool normalize) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() < 2) throw ParseError(path.string(), lineno, "expected label<TAB>role");
    auto role = parse_role(text::trim(cols[1]));
    if (!role) throw ParseError(path.string(), lineno, "unknown role '" + cols[1] + "'");
    // a label absent from the triples declares an isolated node
    auto v = g.add_node(label_form(cols[0], normalize));
    g.set_role(v, *role);
  }
}

void save_roles(const KnowledgeGraph& g, const fs::path& path) {
  auto out = open_out(path);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.role(v) == NodeRole::other && g.degree(v) > 0) continue;
    out << g.node_label(v) << '\t' << role_name(g.role(v)) << '\n';
  }
}

GoldStandard load_gold(const fs::path& path, KnowledgeGraph& g, bool normalize) {
  auto in = open_in(path);
  const bool designated = !g.type_nodes().empty() || !g.target_nodes().empty();
  GoldStandard gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() < 2) throw ParseError(path.string(), lineno, "expected term<TAB>type");
    NodeId term = require_node(g, label_form(cols[0], normalize), path, lineno);
    NodeId type = require_node(g, label_form(cols[1], normalize), path, lineno);
    if (designated) {
      if (g.role(type) != NodeRole::type) {
        throw ParseError(path.string(), lineno, "'" + cols[1] + "' is not a type node");
      }
      if (g.role(term) != NodeRole::term) {
        throw ParseError(path.string(), lineno, "'" + cols[0] + "' is not a target term");
      }
    } else if (g.role(type) == NodeRole::term || g.role(term) == NodeRole::type) {
      throw ParseError(path.string(), lineno, "node used both as term and type");
    }
    auto [it, inserted] = gold.type_of.emplace(term, type);
    if (!inserted && it->second != type) {
      throw ParseError(path.string(), lineno, "term '" + cols[0] + "' mapped to two types");
    }
    if (!designated) {
      g.set_role(term, NodeRole::term);
      g.set_role(type, NodeRole::type);
    }
  }
  if (gold.type_of.empty()) throw InputError(path.string() + ": empty gold file");
  for (NodeId t : g.target_nodes()) {
    if (!gold.type_of.contains(t)) {
      throw InputError(path.string() + ": target '" + g.node_label(t) + "' has no gold type");
    }
  }
  for (NodeId t : g.type_nodes()) gold.support[t] = 0;
  for (const auto& [term, type] : gold.type_of) ++gold.support[type];
  return gold;
}

void save_gold(const KnowledgeGraph& g, const GoldStandard& gold, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& [term, type] : gold.type_of) {
    out << g.node_label(term) << '\t' << g.node_label(type) << '\n';
  }
}

std::unordered_map<std::string, std::string> load_sentences(const fs::path& path) {
  auto in = open_in(path);
  std::unordered_map<std::string, std::string> sentences;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (text::trim(line).empty()) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      sentences[obj.at("id").get<std::string>()] = obj.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return sentences;
}

}  // namespace gssl
