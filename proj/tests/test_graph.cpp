// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "scenecat/evaluation.hpp"
#include "scenecat/graph.hpp"

using namespace scenecat;

namespace {

// exp(-tau (KL(p||q) + KL(q||p))), each KL summed as p log(p/q).
double oracle_q(const std::vector<float>& a, const std::vector<float>& b, double tau, double eps) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i] + eps;
    sb += b[i] + eps;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = (a[i] + eps) / sa, q = (b[i] + eps) / sb;
    kl += p * std::log(p / q) + q * std::log(q / p);
  }
  return std::exp(-tau * kl);
}

RepresentationSet random_reps(int n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RepresentationSet reps;
  for (int i = 0; i < n; ++i) {
    std::vector<float> r(dim);
    for (float& v : r) v = u(rng) < 0.5f ? 0.0f : u(rng);
    reps.append("v" + std::to_string(i), r);
  }
  return reps;
}

std::vector<float> row_vec(const RepresentationSet& r, std::size_t i) {
  return {r.row(i).begin(), r.row(i).end()};
}

}  // namespace

TEST(EdgeProbability, IdenticalInputsGiveOne) {
  const std::vector<float> a{0.1f, 0.0f, 0.7f, 0.3f};
  EXPECT_EQ(edge_probability(a, a, 0.2), 1.0);
}

TEST(EdgeProbability, TwoComponentHandValue) {
  const std::vector<float> a{1.0f, 0.0f}, b{0.0f, 1.0f};
  const double eps = 1e-6;
  const double p0 = (1 + eps) / (1 + 2 * eps), p1 = eps / (1 + 2 * eps);
  // symmetric KL of (p0, p1) against (p1, p0)
  const double d = 2 * (p0 * std::log(p0 / p1) + p1 * std::log(p1 / p0));
  EXPECT_NEAR(edge_probability(a, b, 0.2, eps), std::exp(-0.2 * d), 1e-15);
  EXPECT_NEAR(std::log(edge_probability(a, b, 0.2, eps)), -0.2 * d, 1e-10);
}

TEST(EdgeProbability, MatchesOracleAndIsSymmetric) {
  const RepresentationSet reps = random_reps(30, 45, 1);
  for (int i = 0; i < 30; ++i)
    for (int j = i + 1; j < 30; ++j) {
      const auto a = row_vec(reps, i), b = row_vec(reps, j);
      const double q = edge_probability(a, b, 0.2);
      EXPECT_EQ(q, edge_probability(b, a, 0.2));
      EXPECT_NEAR(q, oracle_q(a, b, 0.2, 1e-6), 1e-10 * std::max(1.0, q));
      EXPECT_GT(q, 0.0);
      EXPECT_LE(q, 1.0);
    }
}

TEST(EdgeProbability, RejectsBadInput) {
  const std::vector<float> a{0.1f, 0.2f}, b{0.1f};
  EXPECT_THROW(edge_probability(a, b, 0.2), ConfigError);
  EXPECT_THROW(edge_probability(a, a, 0.0), ConfigError);
}

TEST(BuildGraph, ThreeVerticesAreComplete) {
  const RepresentationSet reps = random_reps(3, 9, 2);
  const SimilarityGraph g = build_graph(reps, {0.2, 6, 1e-6});
  ASSERT_EQ(g.edges().size(), 3u);
  for (const Edge& e : g.edges())
    EXPECT_NEAR(e.q, oracle_q(row_vec(reps, e.s), row_vec(reps, e.t), 0.2, 1e-6), 1e-12);
}

TEST(BuildGraph, MatchesBruteForceTopK) {
  const int n = 20, k = 3;
  const RepresentationSet reps = random_reps(n, 27, 3);
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) q[i][j] = oracle_q(row_vec(reps, i), row_vec(reps, j), 0.2, 1e-6);
  std::set<std::pair<int, int>> want;
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) { return q[i][a] > q[i][b]; });
    for (int r = 0; r < k; ++r) want.insert({std::min(i, others[r]), std::max(i, others[r])});
  }
  const SimilarityGraph g = build_graph(reps, {0.2, k, 1e-6});
  std::set<std::pair<int, int>> got;
  for (const Edge& e : g.edges()) {
    got.insert({e.s, e.t});
    EXPECT_NEAR(e.q, q[e.s][e.t], 1e-12);
  }
  EXPECT_EQ(got, want);
  // every vertex keeps its own k; hubs may collect more, the total cannot
  for (int v = 0; v < n; ++v) EXPECT_GE(g.neighbors(v).size(), static_cast<std::size_t>(k));
  EXPECT_LE(g.edges().size(), static_cast<std::size_t>(n * k));
}

TEST(BuildGraph, DuplicateVerticesAreJoinedWithCertainty) {
  RepresentationSet reps = random_reps(10, 18, 4);
  reps.append("dup", row_vec(reps, 4));
  const SimilarityGraph g = build_graph(reps, {0.2, 2, 1e-6});
  bool found = false;
  for (const Edge& e : g.edges())
    if (e.s == 4 && e.t == 10) {
      found = true;
      EXPECT_EQ(e.q, 1.0);
    }
  EXPECT_TRUE(found);
}

TEST(BuildGraph, PermutationInvariance) {
  const int n = 25;
  const RepresentationSet reps = random_reps(n, 36, 5);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
  RepresentationSet permuted;
  for (int i = 0; i < n; ++i) permuted.append(reps.ids[perm[i]], reps.row(perm[i]));

  const SimilarityGraph a = build_graph(reps, {0.2, 4, 1e-6});
  const SimilarityGraph b = build_graph(permuted, {0.2, 4, 1e-6});
  std::map<std::pair<int, int>, double> ea, eb;
  for (const Edge& e : a.edges()) ea[{e.s, e.t}] = e.q;
  for (const Edge& e : b.edges()) eb[{std::min(perm[e.s], perm[e.t]), std::max(perm[e.s], perm[e.t])}] = e.q;
  ASSERT_EQ(ea.size(), eb.size());
  for (const auto& [key, q] : ea) {
    ASSERT_TRUE(eb.count(key));
    EXPECT_EQ(eb[key], q);
  }
}

TEST(BuildGraph, EdgesAreOrderedAndValid) {
  const RepresentationSet reps = random_reps(40, 18, 7);
  const SimilarityGraph g = build_graph(reps, {0.2, 5, 1e-6});
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    EXPECT_LT(e.s, e.t);
    EXPECT_GT(e.q, 0.0);
    EXPECT_LE(e.q, 1.0);
    if (i > 0) {
      const Edge& p = g.edges()[i - 1];
      EXPECT_TRUE(p.s < e.s || (p.s == e.s && p.t < e.t));
    }
  }
}

TEST(BuildGraph, ClustersAreMoreSimilarWithin) {
  const SyntheticSet s = synth_representations(3, 10, 90, 10, 0.02, 8);
  const SimilarityGraph g = build_graph(s.reps, {0.2, 4, 1e-6});
  for (const Edge& e : g.edges()) EXPECT_EQ(s.truth[e.s], s.truth[e.t]) << e.s << " " << e.t;
}

TEST(SimilarityGraph, RejectsInvalidEdges) {
  EXPECT_THROW(SimilarityGraph(3, {{1, 1, 0.5}}), ConfigError);
  EXPECT_THROW(SimilarityGraph(3, {{0, 3, 0.5}}), ConfigError);
  EXPECT_THROW(SimilarityGraph(3, {{0, 1, 0.0}}), ConfigError);
  EXPECT_THROW(SimilarityGraph(3, {{0, 1, 1.5}}), ConfigError);
  EXPECT_THROW(build_graph(random_reps(1, 9, 1)), ConfigError);
}
