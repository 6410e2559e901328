#include "gssl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gssl/error.hpp"

namespace gssl {

std::string_view role_name(NodeRole role) {
  switch (role) {
    case NodeRole::term:
      return "term";
    case NodeRole::type:
      return "type";
    case NodeRole::other:
      break;
  }
  return "other";
}

std::optional<NodeRole> parse_role(std::string_view s) {
  if (s == "term") return NodeRole::term;
  if (s == "type") return NodeRole::type;
  if (s == "other") return NodeRole::other;
  return std::nullopt;
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw InputError("feature matrix: data size " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InputError("feature matrix: non-finite value at row " + std::to_string(i / dim_));
    }
  }
}

void FeatureMatrix::append_row(std::span<const float> values) {
  if (rows_ == 0 && dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) {
    throw InputError("feature matrix: appended row has dim " + std::to_string(values.size()) +
                     ", expected " + std::to_string(dim_));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw InputError("feature matrix: non-finite value in appended row");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const NodeId> ids) const {
  FeatureMatrix out(ids.size(), dim_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

NodeId KnowledgeGraph::add_node(std::string label, NodeRole role) {
  if (auto it = node_index_.find(label); it != node_index_.end()) return it->second;
  auto id = static_cast<NodeId>(node_labels_.size());
  node_index_.emplace(label, id);
  node_labels_.push_back(std::move(label));
  roles_.push_back(role);
  in_.emplace_back();
  out_.emplace_back();
  return id;
}

RelationId KnowledgeGraph::add_relation(std::string label) {
  if (auto it = relation_index_.find(label); it != relation_index_.end()) return it->second;
  auto id = static_cast<RelationId>(relation_labels_.size());
  relation_index_.emplace(label, id);
  relation_labels_.push_back(std::move(label));
  return id;
}

bool KnowledgeGraph::add_edge(Triple t) {
  if (t.head >= num_nodes() || t.tail >= num_nodes() || t.relation >= num_relations()) {
    throw std::out_of_range("add_edge: invalid handle");
  }
  if (!edge_set_.insert(EdgeKey{t.head, t.relation, t.tail}).second) return false;
  auto idx = static_cast<std::uint32_t>(edges_.size());
  out_[t.head].push_back(idx);
  in_[t.tail].push_back(idx);
  edges_.push_back(std::move(t));
  return true;
}

std::optional<NodeId> KnowledgeGraph::find_node(std::string_view label) const {
  auto it = node_index_.find(std::string(label));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view label) const {
  auto it = relation_index_.find(std::string(label));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::has_edge(NodeId head, RelationId relation, NodeId tail) const {
  return edge_set_.contains(EdgeKey{head, relation, tail});
}

void KnowledgeGraph::set_role(NodeId v, NodeRole role) { roles_.at(v) = role; }

std::vector<NodeId> KnowledgeGraph::nodes_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < roles_.size(); ++v) {
    if (roles_[v] == role) out.push_back(v);
  }
  return out;
}

std::vector<Neighbor> KnowledgeGraph::neighbors(NodeId v, Direction dir) const {
  const auto& ins = in_.at(v);
  const auto& outs = out_.at(v);
  std::vector<Neighbor> result;
  std::size_t i = 0;
  std::size_t o = 0;
  const bool want_in = dir != Direction::out;
  const bool want_out = dir != Direction::in;
  // Merge the two lists by edge index so "both" keeps insertion order.
  while ((want_in && i < ins.size()) || (want_out && o < outs.size())) {
    bool take_in;
    if (!want_out || o >= outs.size()) {
      take_in = true;
    } else if (!want_in || i >= ins.size()) {
      take_in = false;
    } else {
      take_in = ins[i] <= outs[o];
      // A self-loop sits in both lists with the same index; report it once per side.
    }
    if (take_in) {
      const auto& e = edges_[ins[i]];
      result.push_back({e.head, e.relation, Direction::in, ins[i]});
      ++i;
    } else {
      const auto& e = edges_[outs[o]];
      result.push_back({e.tail, e.relation, Direction::out, outs[o]});
      ++o;
    }
  }
  return result;
}

void KnowledgeGraph::set_node_features(FeatureMatrix m) {
  if (m.rows() != num_nodes()) {
    throw InputError("node features: " + std::to_string(m.rows()) + " rows for " +
                     std::to_string(num_nodes()) + " nodes");
  }
  if (!relation_features_.empty() && relation_features_.dim() != m.dim()) {
    throw InputError("node features: dimension differs from relation features");
  }
  node_features_ = std::move(m);
}

void KnowledgeGraph::set_relation_features(FeatureMatrix m) {
  if (m.rows() != num_relations()) {
    throw InputError("relation features: " + std::to_string(m.rows()) + " rows for " +
                     std::to_string(num_relations()) + " relations");
  }
  if (!node_features_.empty() && node_features_.dim() != m.dim()) {
    throw InputError("relation features: dimension differs from node features");
  }
  relation_features_ = std::move(m);
}

namespace {

struct DisjointSets {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> size;

  explicit DisjointSets(std::size_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

}  // namespace

double average_degree(std::size_t n_nodes, std::size_t n_edges) {
  if (n_nodes == 0) throw InputError("average degree of an empty graph");
  return 2.0 * static_cast<double>(n_edges) / static_cast<double>(n_nodes);
}

TopologyStats topology_stats(const KnowledgeGraph& g) {
  if (g.num_nodes() == 0) throw InputError("topology_stats: empty graph");
  DisjointSets ds(g.num_nodes());
  for (const auto& e : g.edges()) ds.unite(e.head, e.tail);

  std::size_t n_comp = 0;
  std::uint32_t giant = 0;
  for (std::uint32_t v = 0; v < g.num_nodes(); ++v) {
    if (ds.find(v) == v) {
      ++n_comp;
      giant = std::max(giant, ds.size[v]);
    }
  }
  TopologyStats s;
  s.n_nodes = g.num_nodes();
  s.n_edges = g.num_edges();
  s.n_relations = g.num_relations();
  s.n_comp = n_comp;
  s.r_giant = static_cast<double>(giant) / static_cast<double>(g.num_nodes());
  s.avg_deg = average_degree(g.num_nodes(), g.num_edges());
  return s;
}

}  // namespace gssl
