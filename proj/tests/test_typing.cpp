#include <doctest.h>

#include <cmath>

#include "gssl/error.hpp"
#include "gssl/typing.hpp"
#include "helpers.hpp"

using namespace gssl;

namespace {

// Target/type rows in one table; rows are NodeIds.
FeatureMatrix table(std::vector<std::vector<float>> rows) {
  std::vector<float> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return FeatureMatrix(rows.size(), rows.front().size(), std::move(flat));
}

// Gold and result from (gold class, predicted class) pairs; types are ids
// 100 + class.
std::pair<GoldStandard, TypingResult> from_pairs(const std::vector<std::pair<int, int>>& pairs, int n_classes) {
  GoldStandard g;
  TypingResult r;
  for (int c = 0; c < n_classes; ++c) g.support[100 + c] = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    g.type_of[id] = 100 + pairs[i].first;
    ++g.support[100 + pairs[i].first];
    r.targets.push_back(id);
    r.predicted.push_back(100 + pairs[i].second);
    r.margin.push_back(0);
  }
  return {g, r};
}

}  // namespace

TEST_CASE("assign: exact match, tie to lower id, hand cosines") {
  const float s = static_cast<float>(1 / std::sqrt(2.0));
  // rows: 0 = e1 type, 1 = e2 type, 2..4 targets
  auto x = table({{1, 0}, {0, 1}, {0, 1}, {s, s}, {0.9f, 0.1f}});
  std::vector<NodeId> targets{2, 3, 4}, types{1, 0};
  auto r = assign_types(EmbeddingView::of(x), targets, types);
  CHECK(r.predicted == std::vector<NodeId>{1, 0, 0});
  CHECK(r.margin[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(cosine(x.row(4), x.row(0)) == doctest::Approx(0.9939).epsilon(1e-3));
  CHECK(cosine(x.row(4), x.row(1)) == doctest::Approx(0.1104).epsilon(1e-3));
}

TEST_CASE("assign: zero-norm target goes to the lowest type id") {
  auto x = table({{1, 0}, {0, 1}, {0, 0}});
  std::vector<NodeId> targets{2}, types{1, 0};
  CHECK(assign_types(EmbeddingView::of(x), targets, types).predicted[0] == 0);
  std::vector<NodeId> none;
  CHECK_THROWS_AS(assign_types(EmbeddingView::of(x), targets, none), InputError);
}

TEST_CASE("top-k lists the best types first") {
  auto x = table({{1, 0}, {0, 1}, {-1, 0}, {0.8f, 0.6f}});
  std::vector<NodeId> targets{3}, types{0, 1, 2};
  auto k = top_k_types(EmbeddingView::of(x), targets, types, 2);
  CHECK(k[0] == std::vector<NodeId>{0, 1});
}

TEST_CASE("metrics: hand confusion [[3,1],[2,2]]") {
  auto [gold, r] = from_pairs({{0, 0}, {0, 0}, {0, 0}, {0, 1}, {1, 0}, {1, 0}, {1, 1}, {1, 1}}, 2);
  auto m = compute_metrics(r, gold);
  CHECK(m.accuracy == doctest::Approx(0.625));
  CHECK(m.macro_precision == doctest::Approx((3.0 / 5 + 2.0 / 3) / 2));
  CHECK(std::abs(m.macro_precision - 0.6333) < 1e-4);
  CHECK(m.macro_recall == doctest::Approx((0.75 + 0.5) / 2));
  REQUIRE(m.per_class.size() == 2);
  CHECK(m.per_class[0].predicted == 5);
}

TEST_CASE("metrics: perfect, never-predicted class, missing gold") {
  auto [gold, r] = from_pairs({{0, 0}, {1, 1}, {2, 2}}, 3);
  auto m = compute_metrics(r, gold);
  CHECK(m.accuracy == 1.0);
  CHECK(m.macro_precision == 1.0);
  CHECK(m.macro_f1 == 1.0);
  auto [g2, r2] = from_pairs({{0, 0}, {1, 0}, {2, 0}}, 3);
  auto m2 = compute_metrics(r2, g2);
  CHECK(m2.per_class[1].precision == 0.0);
  CHECK(m2.macro_precision == doctest::Approx(1.0 / 9));
  r2.targets.push_back(77);
  r2.predicted.push_back(100);
  r2.margin.push_back(0);
  CHECK_THROWS_AS(compute_metrics(r2, g2), InputError);
}

TEST_CASE("property: balanced 8 x 130 gold makes macro-recall equal accuracy") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<std::pair<int, int>> pairs;
    for (int c = 0; c < 8; ++c) {
      for (int i = 0; i < 130; ++i) pairs.emplace_back(c, static_cast<int>(uniform_index(rng, 8)));
    }
    auto [gold, r] = from_pairs(pairs, 8);
    auto m = compute_metrics(r, gold);
    CHECK(std::abs(m.macro_recall - m.accuracy) < 1e-12);
  }
}

TEST_CASE("transition: identity, hand tally, empty row, mismatch") {
  auto [gold, init] = from_pairs({{0, 0}, {0, 0}, {0, 0}, {1, 0}}, 2);
  auto t0 = transition_matrix(init, init, gold);
  CHECK(t0.percent[0][0] == 100.0);
  CHECK(t0.percent[1][1] == 100.0);
  auto fin = init;
  fin.predicted = {100, 100, 101, 101};  // correct, correct, now wrong, now right
  auto t = transition_matrix(init, fin, gold);
  CHECK(t.percent[0][0] == doctest::Approx(66.67).epsilon(1e-4));
  CHECK(t.percent[0][1] == doctest::Approx(33.33).epsilon(1e-4));
  CHECK(t.percent[1][0] == 100.0);
  CHECK(t.percent[1][1] == 0.0);
  CHECK(t.count[0][0] == 2);

  auto [g2, all_right] = from_pairs({{0, 0}, {1, 1}}, 2);
  auto te = transition_matrix(all_right, all_right, g2);
  CHECK(te.percent[1][0] == 0.0);
  CHECK(te.percent[1][1] == 0.0);

  auto shorter = init;
  shorter.targets.pop_back();
  shorter.predicted.pop_back();
  shorter.margin.pop_back();
  CHECK_THROWS_AS(transition_matrix(init, shorter, gold), InputError);
}

TEST_CASE("property: transition rows sum to 100") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    std::vector<std::pair<int, int>> a, b;
    for (int i = 0; i < 40; ++i) {
      const int g = static_cast<int>(uniform_index(rng, 4));
      a.emplace_back(g, static_cast<int>(uniform_index(rng, 4)));
      b.emplace_back(g, static_cast<int>(uniform_index(rng, 4)));
    }
    auto [gold, ra] = from_pairs(a, 4);
    auto rb = from_pairs(b, 4).second;
    auto t = transition_matrix(ra, rb, gold);
    for (int row = 0; row < 2; ++row) {
      if (t.count[row][0] + t.count[row][1] == 0) continue;
      CHECK(std::abs(t.percent[row][0] + t.percent[row][1] - 100.0) <= 0.01);
    }
  }
}

TEST_CASE("property: scaling every embedding by c > 0 leaves assignments unchanged") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<float>> rows(20, std::vector<float>(6));
    for (auto& r : rows) for (auto& v : r) v = static_cast<float>(normal01(rng));
    auto x = table(rows);
    for (auto& r : rows) for (auto& v : r) v *= 3.5f;
    auto y = table(rows);
    std::vector<NodeId> types{0, 1, 2, 3}, targets;
    for (NodeId v = 4; v < 20; ++v) targets.push_back(v);
    CHECK(assign_types(EmbeddingView::of(x), targets, types).predicted ==
          assign_types(EmbeddingView::of(y), targets, types).predicted);
  }
}

TEST_CASE("baseline: features equal to the gold type's row give accuracy 1") {
  auto x = table({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  GoldStandard gold;
  gold.type_of = {{3, 1}, {4, 2}, {5, 0}};
  gold.support = {{0, 1}, {1, 1}, {2, 1}};
  std::vector<NodeId> targets{3, 4, 5}, types{0, 1, 2};
  CHECK(baseline_typing(x, targets, types, gold).accuracy == 1.0);
}

TEST_CASE("baseline: random near-orthogonal features sit at chance for 8 types") {
  std::size_t correct = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t n_types = 8, n_targets = 80, dim = 64;
    std::vector<std::vector<float>> rows(n_types + n_targets, std::vector<float>(dim));
    for (auto& r : rows) for (auto& v : r) v = static_cast<float>(normal01(rng));
    GoldStandard gold;
    std::vector<NodeId> types, targets;
    for (NodeId t = 0; t < n_types; ++t) types.push_back(t);
    for (NodeId v = n_types; v < n_types + n_targets; ++v) {
      targets.push_back(v);
      gold.type_of[v] = static_cast<NodeId>((v - n_types) % n_types);
      ++gold.support[gold.type_of[v]];
    }
    auto m = baseline_typing(table(rows), targets, types, gold);
    correct += static_cast<std::size_t>(std::lround(m.accuracy * n_targets));
    total += n_targets;
  }
  const double p = 1.0 / 8, acc = static_cast<double>(correct) / total;
  CHECK(std::abs(acc - p) <= 3 * std::sqrt(p * (1 - p) / total));
}

TEST_CASE("mean and population std") {
  std::vector<double> v{0.50, 0.52, 0.54};
  auto ms = mean_std(v);
  CHECK(ms.mean == doctest::Approx(0.52));
  CHECK(std::abs(ms.std - 0.0163) < 1e-4);
  std::vector<double> one{0.7};
  CHECK(mean_std(one).std == 0.0);
}

TEST_CASE("report writers") {
  testutil::TempDir dir("typing");
  auto g = testutil::make_graph({{"x", "r", "A"}, {"y", "r", "B"}});
  TypingResult r{{0, 2}, {1, 1}, {0.25, 0.5}};
  write_typing_tsv(g, r, dir / "t.tsv", {"h"});
  CHECK(testutil::read_text(dir / "t.tsv") == "# h\nx\tA\t0.250000\ny\tA\t0.500000\n");
  TransitionMatrix t;
  t.percent = {{{66.666666, 33.333333}, {100, 0}}};
  write_transition_csv(t, dir / "m.csv");
  CHECK(testutil::read_text(dir / "m.csv") ==
        ",final_correct,final_incorrect\ninitial_correct,66.67,33.33\ninitial_incorrect,100.00,0.00\n");
}
