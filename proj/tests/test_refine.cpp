#include <doctest.h>

#include <algorithm>
#include <set>

#include "gssl/error.hpp"
#include "gssl/log.hpp"
#include "gssl/refine.hpp"
#include "helpers.hpp"

using namespace gssl;
using testutil::make_graph;

namespace {

std::set<LabelTriple> as_set(const std::vector<LabelTriple>& v) { return {v.begin(), v.end()}; }

LabelTriple isa(std::string h, std::string t) { return {std::move(h), "is-a", std::move(t)}; }

std::set<LabelTriple> edge_set(const KnowledgeGraph& g) {
  std::set<LabelTriple> s;
  for (const auto& e : g.edges()) s.insert({g.node_label(e.head), g.relation_label(e.relation), g.node_label(e.tail)});
  return s;
}

std::set<std::string> node_set(const KnowledgeGraph& g) { return {g.node_labels().begin(), g.node_labels().end()}; }

// Captures warnings while alive.
struct WarnCapture {
  std::vector<std::string> messages;
  log::Sink previous;
  WarnCapture() {
    previous = log::set_sink([this](log::Level l, const std::string& m) {
      if (l == log::Level::warn) messages.push_back(m);
    });
  }
  ~WarnCapture() { log::set_sink(previous); }
};

// Validator that rejects a fixed set of triples.
class RejectSet final : public Validator {
 public:
  explicit RejectSet(std::set<LabelTriple> reject) : reject_(std::move(reject)) {}
  std::vector<int> validate(std::span<const TripleText> batch) override {
    std::vector<int> out;
    for (const auto& t : batch) out.push_back(reject_.contains({t.head, t.relation, t.tail}) ? 0 : 1);
    return out;
  }
  std::string tag() const override { return "reject-set"; }

 private:
  std::set<LabelTriple> reject_;
};

// Fails on its n-th call.
class FailingValidator final : public Validator {
 public:
  explicit FailingValidator(int fail_on) : fail_on_(fail_on) {}
  std::vector<int> validate(std::span<const TripleText> batch) override {
    if (++calls_ == fail_on_) throw ServiceError("backend unavailable");
    return std::vector<int>(batch.size(), 0);
  }
  std::string tag() const override { return "failing"; }

 private:
  int fail_on_;
  int calls_ = 0;
};

}  // namespace

TEST_CASE("is-a rules: worked examples") {
  CHECK(as_set(derive_isa("Stem cell therapy")) ==
        std::set{isa("cell therapy", "therapy"), isa("stem cell therapy", "cell therapy")});
  CHECK(as_set(derive_isa("Disease of cell physiology")) == std::set{isa("disease of cell physiology", "disease")});
  CHECK(derive_isa_without_of("therapy").empty());
  CHECK(as_set(derive_isa_without_of("cell therapy")) == std::set{isa("cell therapy", "therapy")});
  CHECK(as_set(derive_isa_with_of("stem cell of origin")) ==
        std::set{isa("stem cell of origin", "stem cell"), isa("stem cell", "cell")});
}

TEST_CASE("is-a rules: degenerate and empty terms") {
  WarnCapture warnings;
  CHECK(derive_isa_with_of("of interest").empty());
  CHECK(derive_isa_with_of("matters of").empty());
  CHECK(warnings.messages.size() == 2);
  CHECK_THROWS_AS(derive_isa_without_of("   "), std::invalid_argument);
  CHECK_THROWS_AS(derive_isa(""), std::invalid_argument);
}

TEST_CASE("is-a rules: hyphenated words are single tokens") {
  CHECK(as_set(derive_isa("T-cell receptor")) == std::set{isa("t-cell receptor", "receptor")});
}

TEST_CASE("is-a rules: longer chains go down to the single-token root") {
  CHECK(as_set(derive_isa("a b c d")) == std::set{isa("a b c d", "b c d"), isa("b c d", "c d"), isa("c d", "d")});
}

TEST_CASE("enrich: stem cell therapy gains two nodes and two edges") {
  auto g = make_graph({{"stem cell therapy", "treats", "leukemia"}});
  auto r = enrich(g);
  CHECK(r.graph.num_nodes() == g.num_nodes() + 2);
  CHECK(r.graph.num_edges() == g.num_edges() + 2);
  CHECK(r.graph.find_node("cell therapy").has_value());
  CHECK(r.graph.find_node("therapy").has_value());
  CHECK(r.graph.role(*r.graph.find_node("therapy")) == NodeRole::other);
  CHECK(r.log.added.size() == 2);
  for (const auto& a : r.log.added) CHECK(a.triple.relation == "is-a");
}

TEST_CASE("enrich: single-token graph is unchanged") {
  auto g = make_graph({{"a", "r", "b"}, {"b", "s", "c"}});
  auto r = enrich(g);
  CHECK(edge_set(r.graph) == edge_set(g));
  CHECK(r.graph.num_nodes() == g.num_nodes());
  CHECK(r.log.added.empty());
}

TEST_CASE("enrich: components sharing a root token merge") {
  auto g = make_graph({{"stem cell therapy", "r", "x"}, {"gene therapy", "r", "y"}});
  const auto before = topology_stats(g).n_comp;
  auto r = enrich(g);
  CHECK(before == 2);
  CHECK(topology_stats(r.graph).n_comp == before - 1);
}

TEST_CASE("enrich: type nodes are not expanded") {
  auto g = make_graph({{"x", "r", "cell type"}});
  g.set_role(1, NodeRole::type);
  CHECK(enrich(g).log.added.empty());
}

TEST_CASE("enrich: features for created nodes") {
  auto g = make_graph({{"stem cell therapy", "r", "x"}});
  g.set_node_features(FeatureMatrix(2, 2, {1, 1, 2, 2}));
  CHECK_THROWS_AS(enrich(g), InputError);
  FeatureProvider p;
  p.add("Cell Therapy", {5, 6});
  p.set_zero_init(true);
  auto r = enrich(g, p);
  REQUIRE(r.graph.has_node_features());
  CHECK(r.graph.node_features().rows() == 4);
  auto ct = r.graph.node_features().row(*r.graph.find_node("cell therapy"));
  CHECK(ct[0] == 5.0f);
  auto th = r.graph.node_features().row(*r.graph.find_node("therapy"));
  CHECK(th[0] == 0.0f);
}

TEST_CASE("enrich: the is-a relation already in the vocabulary is reused") {
  auto g = make_graph({{"cancer", "is-a", "disease"}, {"lung cancer", "r", "x"}});
  auto r = enrich(g);
  CHECK(r.graph.num_relations() == 2);
  CHECK(r.graph.has_edge(*r.graph.find_node("lung cancer"), 0, *r.graph.find_node("cancer")));
}

TEST_CASE("clean: all-accept is the identity") {
  auto g = make_graph({{"a", "r", "b"}, {"b", "s", "c"}, {"c", "r", "a"}});
  ConstantValidator all1(1);
  auto r = clean(g, all1);
  CHECK(edge_set(r.graph) == edge_set(g));
  CHECK(node_set(r.graph) == node_set(g));
  CHECK(r.log.removed.empty());
}

TEST_CASE("clean: all-reject keeps only targets and types") {
  auto g = make_graph({{"t1", "r", "T"}, {"t1", "s", "junk"}, {"junk", "r", "more junk"}});
  g.set_role(0, NodeRole::term);
  g.set_role(1, NodeRole::type);
  ConstantValidator all0(0);
  auto r = clean(g, all0);
  CHECK(r.graph.num_edges() == 0);
  CHECK(node_set(r.graph) == std::set<std::string>{"t1", "T"});
  CHECK(r.log.removed.size() == 3);
  CHECK(r.graph.relation_labels() == g.relation_labels());
}

TEST_CASE("clean: verdict file keeping two of three edges") {
  testutil::TempDir dir("refine");
  testutil::write_text(dir / "v.tsv", "a\tr\tb\t1\nb\tr\tc\t0\nc\tr\ta\t1\n");
  auto g = make_graph({{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "a"}});
  VerdictFileValidator v(dir / "v.tsv", true);
  auto r = clean(g, v);
  CHECK(r.graph.num_edges() == 2);
  REQUIRE(r.log.removed.size() == 1);
  CHECK(r.log.removed[0].triple == LabelTriple{"b", "r", "c"});
  CHECK(r.log.removed[0].verdict == 0);
  CHECK(r.log.removed[0].tag == "verdict-file");
}

TEST_CASE("clean: features follow surviving nodes") {
  auto g = make_graph({{"t", "r", "T"}, {"x", "r", "y"}});
  g.set_role(0, NodeRole::term);
  g.set_role(1, NodeRole::type);
  g.set_node_features(FeatureMatrix(4, 1, {0, 1, 2, 3}));
  RejectSet v({{"x", "r", "y"}});
  auto r = clean(g, v);
  CHECK(r.graph.num_nodes() == 2);
  CHECK(r.graph.node_features().rows() == 2);
  CHECK(r.graph.node_features().row(*r.graph.find_node("T"))[0] == 1.0f);
}

TEST_CASE("clean: sentence context reaches the validator") {
  struct Recorder final : Validator {
    std::vector<std::string> seen;
    std::vector<int> validate(std::span<const TripleText> batch) override {
      for (const auto& t : batch) seen.push_back(t.sentence);
      return std::vector<int>(batch.size(), 1);
    }
    std::string tag() const override { return "recorder"; }
  } rec;
  KnowledgeGraph g;
  auto a = g.add_node("a"), b = g.add_node("b");
  auto r = g.add_relation("r");
  g.add_edge({a, r, b, std::string("s1")});
  g.add_edge({b, r, a, std::string("missing")});
  clean(g, rec, {{"s1", "A relates to B."}});
  CHECK(rec.seen == std::vector<std::string>{"A relates to B.", ""});
}

TEST_CASE("clean: validator failure aborts with the partial log") {
  KnowledgeGraph g;
  for (int i = 0; i < 600; ++i) g.add_node("n" + std::to_string(i));
  g.add_relation("r");
  for (NodeId i = 0; i + 1 < 600; ++i) g.add_edge({i, 0, i + 1, std::nullopt});
  FailingValidator v(2);  // first chunk of 256 succeeds, second fails
  try {
    clean(g, v);
    FAIL("expected CleanAborted");
  } catch (const CleanAborted& e) {
    CHECK(e.partial_log().removed.size() == 256);
  }
}

TEST_CASE("combined: accept-all equals enrichment, reject-all equals cleaning") {
  auto g = make_graph({{"stem cell therapy", "treats", "leukemia"}, {"leukemia", "r", "blood cancer"}});
  g.set_role(*g.find_node("leukemia"), NodeRole::term);
  ConstantValidator all1(1), all0(0);
  auto e = enrich(g);
  auto c1 = combined_refine(g, all1);
  CHECK(edge_set(c1.graph) == edge_set(e.graph));
  CHECK(node_set(c1.graph) == node_set(e.graph));
  auto c0 = combined_refine(g, all0);
  auto k0 = clean(g, all0);
  CHECK(edge_set(c0.graph) == edge_set(k0.graph));
  CHECK(node_set(c0.graph) == node_set(k0.graph));
}

TEST_CASE("combined: a rejected enrichment triple appears in both lists") {
  auto g = make_graph({{"stem cell therapy", "treats", "leukemia"}});
  RejectSet v({isa("cell therapy", "therapy")});
  auto r = combined_refine(g, v);
  auto in = [](const std::vector<LoggedTriple>& l, const LabelTriple& t) {
    return std::any_of(l.begin(), l.end(), [&](const auto& x) { return x.triple == t; });
  };
  CHECK(in(r.log.added, isa("cell therapy", "therapy")));
  CHECK(in(r.log.removed, isa("cell therapy", "therapy")));
  CHECK_FALSE(r.graph.find_node("therapy").has_value());
  CHECK(r.log.stats_before.has_value());
  CHECK(r.log.stats_after.has_value());
}

TEST_CASE("log JSONL: one object per line") {
  testutil::TempDir dir("refine");
  auto g = make_graph({{"stem cell therapy", "treats", "leukemia"}});
  auto r = enrich(g);
  write_log_jsonl(r.log, dir / "log.jsonl", {"hdr"});
  auto body = testutil::read_text(dir / "log.jsonl");
  CHECK(body.rfind("{\"provenance\":\"hdr\"}\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 2 + 2);  // header, 2 added, stats before/after
  CHECK(body.find("\"action\":\"added\"") != std::string::npos);
}


TEST_CASE("property: refinement structure on random graphs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    auto g = testutil::random_term_graph(seed);
    auto e = enrich(g);
    CHECK(topology_stats(e.graph).n_comp <= topology_stats(g).n_comp);
    auto ee = enrich(e.graph);
    CHECK(edge_set(ee.graph) == edge_set(e.graph));
    CHECK(node_set(ee.graph) == node_set(e.graph));
    for (const auto& a : e.log.added) CHECK(a.triple.relation == "is-a");

    HeuristicValidator h({"cell", "gene"});
    auto c = clean(g, h);
    auto ge = edge_set(g), ce = edge_set(c.graph);
    CHECK(std::includes(ge.begin(), ge.end(), ce.begin(), ce.end()));
    auto gn = node_set(g), cn = node_set(c.graph);
    CHECK(std::includes(gn.begin(), gn.end(), cn.begin(), cn.end()));
    CHECK(c.graph.relation_labels() == g.relation_labels());

    auto k = combined_refine(g, h);
    auto ke = edge_set(k.graph), ee2 = edge_set(e.graph);
    CHECK(std::includes(ee2.begin(), ee2.end(), ke.begin(), ke.end()));

    // deterministic given the same verdicts
    auto k2 = combined_refine(g, h);
    CHECK(edge_set(k2.graph) == ke);
  }
}
