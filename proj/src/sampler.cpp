#include "gssl/sampler.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "gssl/error.hpp"
#include "gssl/rng.hpp"

namespace gssl {

Subgraph whole_graph(const KnowledgeGraph& g) {
  Subgraph s;
  s.num_nodes = g.num_nodes();
  for (const auto& e : g.edges()) s.add(e.head, e.relation, e.tail);
  return s;
}

SampledBatch sample_neighbors(const KnowledgeGraph& g, std::span<const NodeId> seeds,
                              std::span<const std::size_t> fanouts, Direction dir,
                              std::uint64_t seed) {
  if (seeds.empty()) throw InputError("sample_neighbors: empty seed set");
  SampledBatch b;
  b.fanouts.assign(fanouts.begin(), fanouts.end());
  std::unordered_map<NodeId, std::uint32_t> local;
  auto admit = [&](NodeId v) {
    if (local.emplace(v, static_cast<std::uint32_t>(b.nodes.size())).second) b.nodes.push_back(v);
  };
  for (NodeId v : seeds) {
    if (v >= g.num_nodes()) throw InputError("sample_neighbors: seed out of range");
    admit(v);
  }
  b.num_seeds = b.nodes.size();
  b.frontier_sizes.push_back(b.nodes.size());

  Rng rng(seed);
  std::unordered_set<std::uint32_t> taken;
  std::vector<std::uint32_t> cand;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < fanouts.size(); ++k) {
    const std::size_t end = b.nodes.size();
    for (std::size_t i = begin; i < end; ++i) {
      const NodeId v = b.nodes[i];
      cand.clear();
      if (dir != Direction::out) cand.insert(cand.end(), g.in_edges(v).begin(), g.in_edges(v).end());
      if (dir != Direction::in) cand.insert(cand.end(), g.out_edges(v).begin(), g.out_edges(v).end());
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      std::size_t keep = std::min(cand.size(), fanouts[k]);
      if (keep < cand.size()) {
        for (std::size_t j = 0; j < keep; ++j) {
          std::swap(cand[j], cand[j + uniform_index(rng, cand.size() - j)]);
        }
      }
      for (std::size_t j = 0; j < keep; ++j) {
        if (!taken.insert(cand[j]).second) continue;
        const auto& e = g.edges()[cand[j]];
        admit(e.head);
        admit(e.tail);
      }
    }
    begin = end;
    b.frontier_sizes.push_back(b.nodes.size());
  }

  b.edge_ids.assign(taken.begin(), taken.end());
  std::sort(b.edge_ids.begin(), b.edge_ids.end());
  b.sub.num_nodes = b.nodes.size();
  for (auto id : b.edge_ids) {
    const auto& e = g.edges()[id];
    b.sub.add(local.at(e.head), e.relation, local.at(e.tail));
  }
  return b;
}

SampledBatch full_graph_batch(const KnowledgeGraph& g) {
  SampledBatch b;
  b.nodes.resize(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) b.nodes[v] = v;
  b.num_seeds = g.num_nodes();
  b.frontier_sizes = {g.num_nodes()};
  b.edge_ids.resize(g.num_edges());
  for (std::uint32_t i = 0; i < g.num_edges(); ++i) b.edge_ids[i] = i;
  b.sub = whole_graph(g);
  return b;
}

}  // namespace gssl
