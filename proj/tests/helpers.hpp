#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "gssl/graph.hpp"
#include "gssl/rng.hpp"
#include "gssl/tensor.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("gssl-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << body;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using LabelEdge = std::tuple<std::string, std::string, std::string>;

inline gssl::KnowledgeGraph make_graph(std::initializer_list<LabelEdge> edges) {
  gssl::KnowledgeGraph g;
  for (const auto& [h, r, t] : edges) {
    gssl::Triple tr;
    tr.head = g.add_node(h);
    tr.relation = g.add_relation(r);
    tr.tail = g.add_node(t);
    g.add_edge(tr);
  }
  return g;
}

// Random multi-relational graph with n nodes and about m distinct edges.
inline gssl::KnowledgeGraph random_graph(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t n_rel) {
  gssl::Rng rng(seed);
  gssl::KnowledgeGraph g;
  for (std::size_t i = 0; i < n; ++i) g.add_node("n" + std::to_string(i));
  for (std::size_t r = 0; r < n_rel; ++r) g.add_relation("r" + std::to_string(r));
  for (std::size_t k = 0; k < m; ++k) {
    auto h = static_cast<gssl::NodeId>(gssl::uniform_index(rng, n));
    auto t = static_cast<gssl::NodeId>(gssl::uniform_index(rng, n));
    auto r = static_cast<gssl::RelationId>(gssl::uniform_index(rng, n_rel));
    g.add_edge(gssl::Triple{h, r, t, std::nullopt});
  }
  return g;
}

template <typename T>
gssl::ad::Tensor<T> random_tensor(gssl::ad::Shape shape, std::uint64_t seed, double scale = 1.0,
                                  bool requires_grad = true) {
  gssl::Rng rng(seed);
  std::vector<T> v(gssl::ad::numel(shape));
  for (auto& x : v) x = static_cast<T>(scale * (2.0 * gssl::uniform01(rng) - 1.0));
  return gssl::ad::Tensor<T>::from(std::move(shape), std::move(v), requires_grad);
}

// Random graph whose labels are built from a small vocabulary so multi-word
// terms share tokens; a few "of" terms are mixed in.
inline gssl::KnowledgeGraph random_term_graph(std::uint64_t seed) {
  static const char* words[] = {"cell", "stem", "therapy", "gene", "blood", "cancer", "lung", "disease", "tissue"};
  gssl::Rng rng(seed);
  gssl::KnowledgeGraph g;
  g.add_relation("r");
  g.add_relation("s");
  const std::size_t n = 8 + gssl::uniform_index(rng, 10);
  for (std::size_t i = 0; i < n; ++i) {
    std::string label;
    const auto len = 1 + gssl::uniform_index(rng, 3);
    for (std::size_t k = 0; k < len; ++k) label += (k ? " " : "") + std::string(words[gssl::uniform_index(rng, 9)]);
    if (gssl::uniform_index(rng, 5) == 0) label += " of " + std::string(words[gssl::uniform_index(rng, 9)]);
    g.add_node(label);
  }
  const std::size_t m = gssl::uniform_index(rng, 2 * n);
  for (std::size_t k = 0; k < m; ++k) {
    const auto h = static_cast<gssl::NodeId>(gssl::uniform_index(rng, g.num_nodes()));
    const auto r = static_cast<gssl::RelationId>(gssl::uniform_index(rng, 2));
    const auto t = static_cast<gssl::NodeId>(gssl::uniform_index(rng, g.num_nodes()));
    g.add_edge({h, r, t, std::nullopt});
  }
  for (gssl::NodeId v = 0; v < g.num_nodes(); ++v) {
    if (gssl::uniform_index(rng, 4) == 0) g.set_role(v, gssl::NodeRole::term);
  }
  return g;
}

}  // namespace testutil
