#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.h"
#include "screensum/graphsum.h"
#include "screensum/rng.h"

namespace screensum {
namespace {

SceneGraph three_scene_graph() {
  // e12 = .5, e13 = .2 (pruned at h = .2 unless kept as raw), e23 = .4
  std::vector<double> w{0, .5, .2, .5, 0, .4, .2, .4, 0};
  SceneGraph g;
  g.n = 3;
  g.weights = w;
  return g;
}

TEST(Graph, PrunesAtThresholdAndClampsNegatives) {
  const SceneGraph g = graph_from_similarities(3, {1, 0.5, 0.19, 0.5, 1, 0.21, 0.19, 0.21, 1}, 0.2);
  EXPECT_EQ(g(0, 1), 0.5);
  EXPECT_EQ(g(0, 2), 0.0);
  EXPECT_EQ(g(1, 2), 0.21);
  EXPECT_EQ(g(0, 0), 0.0);
  const SceneGraph exact = graph_from_similarities(2, {1, 0.2, 0.2, 1}, 0.2);
  EXPECT_EQ(exact(0, 1), 0.0);
  const SceneGraph neg = graph_from_similarities(2, {1, -0.7, -0.7, 1}, 0.0);
  EXPECT_EQ(neg(0, 1), 0.0);
}

TEST(Graph, BuildGraphUsesCosine) {
  const std::vector<std::vector<double>> reps{{1, 0}, {1, 1}, {0, 1}, {-1, 0}};
  const SceneGraph g = build_graph(reps, 0.2);
  EXPECT_NEAR(g(0, 1), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(g(0, 2), 0.0);
  EXPECT_EQ(g(0, 3), 0.0);
  EXPECT_EQ(g(1, 0), g(0, 1));
  EXPECT_THROW(build_graph({{1, 0}, {0, 0}}, 0.2), std::invalid_argument);
}

TEST(Centrality, DirectedThreeSceneExample) {
  const auto c = centrality_directed(three_scene_graph(), 0.7).scores;
  EXPECT_NEAR(c[0], 0.21, 1e-12);
  EXPECT_NEAR(c[1], 0.47, 1e-12);
  EXPECT_NEAR(c[2], 0.42, 1e-12);
}

TEST(Centrality, SummerThreeSceneExample) {
  const auto c = centrality_summer(three_scene_graph(), 0.7, {0.1, 0.2, 0.3}).scores;
  // scene 0: 0.3 * (0.5 + 0.1 + 0.2 + 0.1); scene 1: 0.7 * (0.5 + 0.1) + 0.3 * (0.4 + 0.2)
  EXPECT_NEAR(c[0], 0.3 * 0.9, 1e-12);
  EXPECT_NEAR(c[1], 0.42 + 0.18, 1e-12);
  EXPECT_NEAR(c[2], 0.7 * (0.2 + 0.1 + 0.4 + 0.2), 1e-12);
}

TEST(Centrality, SummerWithZeroPriorEqualsDirected) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(10);
    std::vector<std::vector<double>> reps(n, std::vector<double>(4));
    for (auto& r : reps)
      for (double& v : r) v = rng.normal();
    const SceneGraph g = build_graph(reps, 0.2);
    const double l1 = rng.uniform();
    EXPECT_EQ(centrality_summer(g, l1, std::vector<double>(n, 0.0)).scores, centrality_directed(g, l1).scores);
  }
}

TEST(Centrality, PowerIterationOnSymmetricPair) {
  const SceneGraph g = graph_from_similarities(3, {1, .5, .5, .5, 1, .5, .5, .5, 1}, 0.2);
  const auto c = centrality_power_iteration(g).scores;
  EXPECT_NEAR(c[0], c[1], 1e-9);
  EXPECT_NEAR(c[1], c[2], 1e-9);
}

TEST(CharacterScores, OverlapWithMainCast) {
  std::vector<std::set<std::string>> casts{{"A", "B", "C"}, {}, {"E"}, {"D"}};
  Screenplay sp = testing::make_screenplay("ep", 4, {}, casts, {"A", "C", "D"});
  const auto c = character_scores(sp);
  EXPECT_NEAR(c[0], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(c[1], 0.0);
  EXPECT_EQ(c[2], 0.0);
  EXPECT_EQ(c[3], 1.0);
  const auto lit = character_scores(sp, true);
  EXPECT_GE(lit[2], 1.0);
}

TEST(CharacterScores, MainCharactersAbsentFromScriptIgnored) {
  std::vector<std::set<std::string>> casts{{"A", "B"}, {"B"}};
  Screenplay sp = testing::make_screenplay("ep", 2, {}, casts, {"A", "Z"});
  EXPECT_EQ(character_scores(sp)[0], 0.5);
}

TEST(Selection, LengthAndTies) {
  EXPECT_EQ(summary_length(10, 0.3), 3u);
  EXPECT_EQ(summary_length(2, 0.1), 1u);
  EXPECT_EQ(summary_length(5, 0.5), 3u);  // round half away from zero
  EXPECT_THROW(summary_length(5, 0.0), std::invalid_argument);
  const auto sel = select_top(CentralityScores{{1, 3, 3, 0, 3}}, 0.4);
  EXPECT_EQ(sel.selected, (std::vector<std::size_t>{1, 2}));
}

TEST(Baselines, LeadAndLastExact) {
  for (std::size_t n = 2; n <= 100; ++n) {
    for (double r : {0.1, 0.3, 0.5}) {
      const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r * n)));
      std::vector<std::size_t> lead(m), last(m);
      std::iota(lead.begin(), lead.end(), 0);
      std::iota(last.begin(), last.end(), n - m);
      EXPECT_EQ(baseline(BaselineKind::Lead, n, r, 0).selected, lead);
      EXPECT_EQ(baseline(BaselineKind::Last, n, r, 0).selected, last);
    }
  }
}

TEST(Baselines, MixedStaysInWindowsAndIsSeeded) {
  const std::size_t n = 40;
  const auto a = baseline(BaselineKind::Mixed, n, 0.3, 9);
  EXPECT_EQ(a.selected, baseline(BaselineKind::Mixed, n, 0.3, 9).selected);
  ASSERT_EQ(a.selected.size(), 12u);
  std::size_t front = 0;
  for (std::size_t i : a.selected) {
    EXPECT_TRUE(i < 12 || i >= 28);
    front += i < 12;
  }
  EXPECT_EQ(front, 6u);
}

}  // namespace
}  // namespace screensum
