#include <doctest.h>

#include <algorithm>
#include <set>

#include "gssl/error.hpp"
#include "gssl/sampler.hpp"
#include "helpers.hpp"

using namespace gssl;
using testutil::make_graph;

namespace {

std::set<std::string> labels(const KnowledgeGraph& g, const SampledBatch& b) {
  std::set<std::string> out;
  for (auto v : b.nodes) out.insert(g.node_label(v));
  return out;
}

}  // namespace

TEST_CASE("fanout above the degree keeps every in-neighbor") {
  auto g = make_graph({{"a", "r", "v"}, {"b", "r", "v"}, {"c", "r", "v"}});
  const NodeId v = *g.find_node("v");
  std::vector<NodeId> seeds{v};
  std::vector<std::size_t> fan{10};
  auto b = sample_neighbors(g, seeds, fan, Direction::in, 1);
  CHECK(b.sub.num_edges() == 3);
  CHECK(labels(g, b) == std::set<std::string>{"a", "b", "c", "v"});
  CHECK(b.nodes[0] == v);
  CHECK(b.num_seeds == 1);
}

TEST_CASE("fanout 2 of 5 picks exactly 2, reproducibly") {
  auto g = make_graph({{"a", "r", "v"}, {"b", "r", "v"}, {"c", "r", "v"}, {"d", "r", "v"}, {"e", "r", "v"}});
  std::vector<NodeId> seeds{*g.find_node("v")};
  std::vector<std::size_t> fan{2};
  auto b1 = sample_neighbors(g, seeds, fan, Direction::in, 42);
  auto b2 = sample_neighbors(g, seeds, fan, Direction::in, 42);
  CHECK(b1.sub.num_edges() == 2);
  CHECK(b1.nodes.size() == 3);
  CHECK(b1.edge_ids == b2.edge_ids);
  CHECK(b1.nodes == b2.nodes);
  std::set<std::vector<std::uint32_t>> distinct;
  for (std::uint64_t s = 0; s < 30; ++s) distinct.insert(sample_neighbors(g, seeds, fan, Direction::in, s).edge_ids);
  CHECK(distinct.size() > 1);
}

TEST_CASE("two hops along a path reach the start") {
  auto g = make_graph({{"a", "r", "b"}, {"b", "r", "c"}});
  std::vector<NodeId> seeds{*g.find_node("c")};
  std::vector<std::size_t> fan{5, 5};
  auto b = sample_neighbors(g, seeds, fan, Direction::in, 0);
  CHECK(labels(g, b) == std::set<std::string>{"a", "b", "c"});
  CHECK(b.frontier_sizes == std::vector<std::size_t>{1, 2, 3});
  // outgoing direction from c finds nothing
  auto out = sample_neighbors(g, seeds, fan, Direction::out, 0);
  CHECK(out.nodes.size() == 1);
  CHECK(out.sub.num_edges() == 0);
}

TEST_CASE("duplicate seeds collapse, empty seeds are rejected") {
  auto g = make_graph({{"a", "r", "b"}});
  std::vector<NodeId> seeds{0, 0, 1};
  std::vector<std::size_t> fan{1};
  auto b = sample_neighbors(g, seeds, fan, Direction::both, 0);
  CHECK(b.num_seeds == 2);
  std::vector<NodeId> none;
  CHECK_THROWS_AS(sample_neighbors(g, none, fan, Direction::in, 0), InputError);
}

TEST_CASE("full-graph batch covers every node and edge") {
  auto g = testutil::random_graph(3, 12, 20, 2);
  auto b = full_graph_batch(g);
  CHECK(b.nodes.size() == g.num_nodes());
  CHECK(b.sub.num_edges() == g.num_edges());
  auto w = whole_graph(g);
  CHECK(w.head == b.sub.head);
}

TEST_CASE("property: sampled subgraphs are consistent with the source graph") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto g = testutil::random_graph(seed, 20, 40, 3);
    std::vector<NodeId> seeds{static_cast<NodeId>(seed % 20), static_cast<NodeId>((seed * 7) % 20)};
    std::vector<std::size_t> fan{3, 2};
    auto b = sample_neighbors(g, seeds, fan, Direction::both, seed);
    CHECK(std::is_sorted(b.edge_ids.begin(), b.edge_ids.end()));
    std::set<NodeId> uniq(b.nodes.begin(), b.nodes.end());
    CHECK(uniq.size() == b.nodes.size());
    CHECK(b.frontier_sizes.back() == b.nodes.size());
    // per hop, each frontier node contributes at most its fanout
    CHECK(b.edge_ids.size() <= b.frontier_sizes[0] * 3 + (b.frontier_sizes[1] - b.frontier_sizes[0]) * 2);
    for (std::size_t e = 0; e < b.sub.num_edges(); ++e) {
      const auto& orig = g.edges()[b.edge_ids[e]];
      CHECK(b.nodes[b.sub.head[e]] == orig.head);
      CHECK(b.nodes[b.sub.tail[e]] == orig.tail);
      CHECK(b.sub.relation[e] == orig.relation);
    }
  }
}
