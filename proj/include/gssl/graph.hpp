#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace gssl {

using NodeId = std::uint32_t;
using RelationId = std::uint32_t;

enum class NodeRole : std::uint8_t { other, term, type };

std::string_view role_name(NodeRole role);
std::optional<NodeRole> parse_role(std::string_view s);

struct Triple {
  NodeId head = 0;
  RelationId relation = 0;
  NodeId tail = 0;
  std::optional<std::string> sentence_id;

  // Identity ignores provenance; two triples with the same endpoints and
  // relation are the same edge.
  bool same_edge(const Triple& o) const {
    return head == o.head && relation == o.relation && tail == o.tail;
  }
};

/// Dense row-major float matrix. Every entry is finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim);
  /// Throws InputError if any value is non-finite or the size is inconsistent.
  FeatureMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<float> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  const std::vector<float>& data() const { return data_; }

  void append_row(std::span<const float> values);
  FeatureMatrix select_rows(std::span<const NodeId> ids) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

enum class Direction : std::uint8_t { in, out, both };

struct Neighbor {
  NodeId node;
  RelationId relation;
  Direction tag;  // in: edge points at the queried node; out: edge leaves it
  std::size_t edge;

  bool operator==(const Neighbor&) const = default;
};

struct TopologyStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_relations = 0;
  std::size_t n_comp = 0;
  double r_giant = 0.0;
  double avg_deg = 0.0;
};

/// Multi-relational directed graph with labeled nodes and relations.
///
/// Node and relation handles are dense and assigned in insertion order.
/// Exact-duplicate edges (same head, relation, tail) are stored once.
/// Graphs are built through the mutating methods by loaders and refinement
/// passes, then shared read-only.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::size_t num_nodes() const { return node_labels_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_relations() const { return relation_labels_.size(); }

  /// Returns the existing handle when the label is already present.
  NodeId add_node(std::string label, NodeRole role = NodeRole::other);
  RelationId add_relation(std::string label);
  /// Returns false if the edge already exists. Throws on invalid handles.
  bool add_edge(Triple t);

  std::optional<NodeId> find_node(std::string_view label) const;
  std::optional<RelationId> find_relation(std::string_view label) const;
  bool has_edge(NodeId head, RelationId relation, NodeId tail) const;

  const std::string& node_label(NodeId v) const { return node_labels_.at(v); }
  const std::string& relation_label(RelationId r) const { return relation_labels_.at(r); }
  const std::vector<std::string>& node_labels() const { return node_labels_; }
  const std::vector<std::string>& relation_labels() const { return relation_labels_; }
  const std::vector<Triple>& edges() const { return edges_; }

  NodeRole role(NodeId v) const { return roles_.at(v); }
  void set_role(NodeId v, NodeRole role);
  std::vector<NodeId> nodes_with_role(NodeRole role) const;
  std::vector<NodeId> type_nodes() const { return nodes_with_role(NodeRole::type); }
  std::vector<NodeId> target_nodes() const { return nodes_with_role(NodeRole::term); }

  /// Adjacency in edge-insertion order. Throws std::out_of_range on a bad node.
  std::vector<Neighbor> neighbors(NodeId v, Direction dir) const;
  std::size_t degree(NodeId v) const { return in_.at(v).size() + out_.at(v).size(); }
  std::span<const std::uint32_t> in_edges(NodeId v) const { return in_.at(v); }
  std::span<const std::uint32_t> out_edges(NodeId v) const { return out_.at(v); }

  const FeatureMatrix& node_features() const { return node_features_; }
  const FeatureMatrix& relation_features() const { return relation_features_; }
  /// Row counts must match |V| (resp. |R|).
  void set_node_features(FeatureMatrix m);
  void set_relation_features(FeatureMatrix m);
  bool has_node_features() const { return !node_features_.empty(); }

 private:
  struct EdgeKey {
    NodeId head;
    RelationId relation;
    NodeId tail;
    bool operator==(const EdgeKey&) const = default;
  };
  struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const {
      std::uint64_t h = (static_cast<std::uint64_t>(k.head) << 32) ^ k.tail;
      h ^= static_cast<std::uint64_t>(k.relation) * 0x9e3779b97f4a7c15ULL;
      return std::hash<std::uint64_t>{}(h);
    }
  };

  std::vector<std::string> node_labels_;
  std::vector<NodeRole> roles_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, RelationId> relation_index_;
  std::vector<Triple> edges_;
  std::unordered_set<EdgeKey, EdgeKeyHash> edge_set_;
  std::vector<std::vector<std::uint32_t>> in_;
  std::vector<std::vector<std::uint32_t>> out_;
  FeatureMatrix node_features_;
  FeatureMatrix relation_features_;
};

/// Components are computed on the undirected projection, ignoring relation
/// labels. Throws InputError on an empty graph.
TopologyStats topology_stats(const KnowledgeGraph& g);

/// Same counts-based formula as topology_stats, for published counts.
double average_degree(std::size_t n_nodes, std::size_t n_edges);

}  // namespace gssl
