#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/tensor.hpp"

namespace gssl {

/// Edge list over local node ids 0..num_nodes-1, consumed by encoder layers.
struct Subgraph {
  std::size_t num_nodes = 0;
  ad::Index head;
  ad::Index relation;
  ad::Index tail;

  std::size_t num_edges() const { return head.size(); }
  void add(std::uint32_t h, std::uint32_t r, std::uint32_t t) {
    head.push_back(h);
    relation.push_back(r);
    tail.push_back(t);
  }
};

/// The whole graph with local id = NodeId.
Subgraph whole_graph(const KnowledgeGraph& g);

inline constexpr std::size_t kUnboundedFanout = std::numeric_limits<std::size_t>::max();

struct SampledBatch {
  std::vector<NodeId> nodes;  // local -> global; seeds first, then hop by hop
  std::size_t num_seeds = 0;
  /// frontier_sizes[k]: number of nodes reached within k hops (k = 0 is the seeds).
  std::vector<std::size_t> frontier_sizes;
  std::vector<std::size_t> fanouts;
  std::vector<std::uint32_t> edge_ids;  // sampled global edges, ascending
  Subgraph sub;
};

/// Each frontier node samples up to fanouts[k] of its edges in `dir`
/// uniformly without replacement (all of them when the degree fits) at the
/// hop k where it first appears. Duplicate seeds are collapsed. Throws
/// InputError on empty seeds.
SampledBatch sample_neighbors(const KnowledgeGraph& g, std::span<const NodeId> seeds,
                              std::span<const std::size_t> fanouts, Direction dir,
                              std::uint64_t seed);

/// Every node (seeds in id order) and every edge.
SampledBatch full_graph_batch(const KnowledgeGraph& g);

}  // namespace gssl
