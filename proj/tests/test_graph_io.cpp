#include <doctest.h>

#include <cstring>
#include <set>

#include "gssl/binio.hpp"
#include "gssl/error.hpp"
#include "gssl/graph_io.hpp"
#include "helpers.hpp"

using namespace gssl;
using testutil::read_text;
using testutil::TempDir;
using testutil::write_text;

namespace {

// NTDF bytes assembled by hand, independent of write_feature_file.
std::string ntdf_bytes(std::uint64_t rows, std::uint32_t dim, const std::vector<float>& values) {
  std::ostringstream out(std::ios::binary);
  out.write("NTDF", 4);
  binio::put_le<std::uint32_t>(out, 1);
  binio::put_le<std::uint64_t>(out, rows);
  binio::put_le<std::uint32_t>(out, dim);
  for (float v : values) binio::put_le<float>(out, v);
  return out.str();
}

}  // namespace

TEST_CASE("load_triples: counts") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr\tb\nb\tr\tc\n");
  auto g = load_triples(dir / "t.tsv");
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.num_relations() == 1);
}

TEST_CASE("load_triples: duplicate rows collapse") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr\tb\na\tr\tb\n");
  CHECK(load_triples(dir / "t.tsv").num_edges() == 1);
}

TEST_CASE("load_triples: relation handles in first-seen order") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr1\tb\nb\tr2\tc\nc\tr1\td\n");
  auto g = load_triples(dir / "t.tsv");
  CHECK(g.find_relation("r1") == 0u);
  CHECK(g.find_relation("r2") == 1u);
}

TEST_CASE("load_triples: comments, sentence ids, normalization") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "# header\n\nStem  Cell\tTreats\tX\ts7\nstem cell\ttreats\tx\n");
  auto raw = load_triples(dir / "t.tsv");
  CHECK(raw.num_nodes() == 4);
  CHECK(raw.edges()[0].sentence_id == std::optional<std::string>("s7"));
  auto norm = load_triples(dir / "t.tsv", true);
  CHECK(norm.num_nodes() == 2);
  CHECK(norm.num_edges() == 1);
  CHECK(norm.find_node("stem cell").has_value());
}

TEST_CASE("load_triples: malformed row reports its line") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr\tb\n\nbad\trow\n");
  try {
    load_triples(dir / "t.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  write_text(dir / "empty.tsv", "# nothing\n");
  CHECK_THROWS_AS(load_triples(dir / "empty.tsv"), InputError);
  CHECK_THROWS_AS(load_triples(dir / "missing.tsv"), InputError);
}

TEST_CASE("NTDF: reader decodes hand-built bytes") {
  TempDir dir("io");
  write_text(dir / "f.ntdf", ntdf_bytes(2, 3, {1, 2, 3, -4, 5.5f, 0}));
  auto m = read_feature_file(dir / "f.ntdf");
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 3);
  CHECK(m.row(1)[0] == -4.0f);
  CHECK(m.row(1)[1] == 5.5f);
}

TEST_CASE("NTDF: writer emits the exact byte layout") {
  TempDir dir("io");
  FeatureMatrix m(2, 2, {0.5f, -1.0f, 3.25f, 8.0f});
  write_feature_file(m, dir / "f.ntdf");
  CHECK(read_text(dir / "f.ntdf") == ntdf_bytes(2, 2, {0.5f, -1.0f, 3.25f, 8.0f}));
  CHECK(read_text(dir / "f.ntdf").size() == 4 + 4 + 8 + 4 + 16);
}

TEST_CASE("NTDF: bad magic, version, truncation, trailing bytes, NaN") {
  TempDir dir("io");
  std::string good = ntdf_bytes(1, 2, {1, 2});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  write_text(dir / "a", bad_magic);
  CHECK_THROWS_AS(read_feature_file(dir / "a"), InputError);
  std::string bad_version = good;
  bad_version[4] = 2;
  write_text(dir / "b", bad_version);
  CHECK_THROWS_AS(read_feature_file(dir / "b"), InputError);
  write_text(dir / "c", good.substr(0, good.size() - 1));
  CHECK_THROWS_AS(read_feature_file(dir / "c"), InputError);
  write_text(dir / "d", good + "x");
  CHECK_THROWS_AS(read_feature_file(dir / "d"), InputError);
  write_text(dir / "e", ntdf_bytes(1, 2, {1, std::nanf("")}));
  CHECK_THROWS_AS(read_feature_file(dir / "e"), InputError);
}

TEST_CASE("load_features: 3 nodes of dim 384 bind in NodeId order") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr\tb\nb\tr\tc\n");
  auto g = load_triples(dir / "t.tsv");
  // file rows in order c, a, b
  std::vector<float> v(3 * 384);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < 384; ++j) v[r * 384 + j] = static_cast<float>(r * 1000 + j);
  }
  write_text(dir / "f.ntdf", ntdf_bytes(3, 384, v));
  write_text(dir / "i.tsv", "0\tc\n1\ta\n2\tb\n");
  auto m = load_features(dir / "f.ntdf", dir / "i.tsv", g);
  CHECK(m.rows() == 3);
  CHECK(m.dim() == 384);
  CHECK(m.row(0)[0] == 1000.0f);  // a
  CHECK(m.row(1)[5] == 2005.0f);  // b
  CHECK(m.row(2)[383] == 383.0f);  // c
}

TEST_CASE("load_features: missing node names the label") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "a\tr\tb\n");
  auto g = load_triples(dir / "t.tsv");
  write_text(dir / "f.ntdf", ntdf_bytes(1, 2, {1, 2}));
  write_text(dir / "i.tsv", "0\ta\n");
  try {
    load_features(dir / "f.ntdf", dir / "i.tsv", g);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
}

TEST_CASE("load_gold: 1,040 terms over 8 types gives 130 each") {
  TempDir dir("io");
  std::string triples, gold;
  for (int t = 0; t < 8; ++t) {
    for (int i = 0; i < 130; ++i) {
      const std::string term = "term" + std::to_string(t) + "_" + std::to_string(i);
      triples += term + "\tr\tT" + std::to_string(t) + "\n";
      gold += term + "\tT" + std::to_string(t) + "\n";
    }
  }
  write_text(dir / "t.tsv", triples);
  write_text(dir / "g.tsv", gold);
  auto g = load_triples(dir / "t.tsv");
  auto gs = load_gold(dir / "g.tsv", g);
  CHECK(gs.type_of.size() == 1040);
  CHECK(gs.support.size() == 8);
  for (const auto& [type, n] : gs.support) CHECK(n == 130);
  CHECK(g.target_nodes().size() == 1040);
  CHECK(g.type_nodes().size() == 8);
}

TEST_CASE("load_gold: empty, unknown label, conflicting type") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "x\tr\tA\ny\tr\tB\n");
  write_text(dir / "empty.tsv", "");
  write_text(dir / "unknown.tsv", "x\tA\nz\tB\n");
  write_text(dir / "twice.tsv", "x\tA\nx\tB\n");
  {
    auto g = load_triples(dir / "t.tsv");
    CHECK_THROWS_AS(load_gold(dir / "empty.tsv", g), InputError);
  }
  {
    auto g = load_triples(dir / "t.tsv");
    CHECK_THROWS_AS(load_gold(dir / "unknown.tsv", g), ParseError);
  }
  {
    auto g = load_triples(dir / "t.tsv");
    CHECK_THROWS_AS(load_gold(dir / "twice.tsv", g), ParseError);
  }
}

TEST_CASE("load_gold: term mapped to a non-type node is an error") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "x\tr\tA\ny\tr\tB\n");
  write_text(dir / "roles.tsv", "x\tterm\nA\ttype\ny\tterm\nB\tother\n");
  write_text(dir / "g.tsv", "x\tA\ny\tB\n");
  auto g = load_triples(dir / "t.tsv");
  load_roles(dir / "roles.tsv", g);
  CHECK_THROWS_AS(load_gold(dir / "g.tsv", g), ParseError);
}

TEST_CASE("roles: unknown role is an error, unknown label declares an isolated node") {
  TempDir dir("io");
  write_text(dir / "t.tsv", "x\tr\tA\n");
  write_text(dir / "bad.tsv", "x\tbanana\n");
  auto g = load_triples(dir / "t.tsv");
  CHECK_THROWS_AS(load_roles(dir / "bad.tsv", g), ParseError);
  write_text(dir / "iso.tsv", "lonely\tterm\n");
  load_roles(dir / "iso.tsv", g);
  REQUIRE(g.find_node("lonely").has_value());
  CHECK(g.degree(*g.find_node("lonely")) == 0);
  CHECK(g.role(*g.find_node("lonely")) == NodeRole::term);
}

TEST_CASE("sentences JSONL") {
  TempDir dir("io");
  write_text(dir / "s.jsonl", "{\"id\": \"s1\", \"text\": \"Stem cells differentiate.\"}\n\n{\"id\":\"s2\",\"text\":\"x\"}\n");
  auto s = load_sentences(dir / "s.jsonl");
  CHECK(s.size() == 2);
  CHECK(s.at("s1") == "Stem cells differentiate.");
  write_text(dir / "bad.jsonl", "{\"id\": 1}\n");
  CHECK_THROWS_AS(load_sentences(dir / "bad.jsonl"), ParseError);
}

TEST_CASE("property: save then load reproduces nodes, edges, relations and feature bytes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TempDir dir("io");
    auto g = testutil::random_graph(seed, 20, 30, 3);
    g.add_node("isolated one");  // no edges
    Rng rng(seed);
    FeatureMatrix x(g.num_nodes(), 4);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      for (auto& f : x.row(v)) f = static_cast<float>(normal01(rng));
      if (v % 3 == 0) g.set_role(v, NodeRole::term);
      if (v % 7 == 1) g.set_role(v, NodeRole::type);
    }
    g.set_node_features(x);
    save_triples(g, dir / "t.tsv", {"provenance line"});
    save_roles(g, dir / "r.tsv");
    save_features(g, dir / "f.ntdf", dir / "i.tsv");

    auto h = load_triples(dir / "t.tsv");
    load_roles(dir / "r.tsv", h);
    h.set_node_features(load_features(dir / "f.ntdf", dir / "i.tsv", h));
    REQUIRE(h.num_nodes() == g.num_nodes());
    CHECK(h.num_edges() == g.num_edges());
    // relations are interned in order of first use, so compare by label
    CHECK(std::set<std::string>(h.relation_labels().begin(), h.relation_labels().end()) ==
          std::set<std::string>(g.relation_labels().begin(), g.relation_labels().end()));
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      auto w = h.find_node(g.node_label(v));
      REQUIRE(w.has_value());
      CHECK(h.role(*w) == g.role(v));
      auto a = g.node_features().row(v), b = h.node_features().row(*w);
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    }
    for (const auto& e : g.edges()) {
      CHECK(h.has_edge(*h.find_node(g.node_label(e.head)), *h.find_relation(g.relation_label(e.relation)),
                       *h.find_node(g.node_label(e.tail))));
    }
  }
}
