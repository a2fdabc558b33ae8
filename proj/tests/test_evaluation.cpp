// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scenecat/csv.hpp"
#include "scenecat/evaluation.hpp"

using namespace scenecat;
namespace fs = std::filesystem;

TEST(Metrics, HandFixtures) {
  const double ln2 = std::log(2.0);
  EXPECT_DOUBLE_EQ(purity({{0, 0, 1, 1}, {0, 0, 0, 0}}), 0.5);
  EXPECT_NEAR(conditional_entropy({{0, 0, 1, 1}, {0, 0, 0, 0}}), ln2, 1e-15);
  EXPECT_DOUBLE_EQ(purity({{0, 0, 1, 1}, {5, 5, 2, 2}}), 1.0);
  EXPECT_EQ(conditional_entropy({{0, 0, 1, 1}, {5, 5, 2, 2}}), 0.0);
  EXPECT_DOUBLE_EQ(purity({{0, 0, 1, 1}, {0, 1, 2, 3}}), 1.0);
  EXPECT_EQ(conditional_entropy({{0, 0, 1, 1}, {0, 1, 2, 3}}), 0.0);
  const LabeledOutcome mixed{{0, 0, 0, 1, 1, 2}, {0, 0, 1, 1, 2, 2}};
  EXPECT_NEAR(purity(mixed), 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(conditional_entropy(mixed), 4.0 / 6.0 * ln2, 1e-15);
}

TEST(Metrics, MatchDoubleLoopOracles) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 60)(rng);
    const int kx = std::uniform_int_distribution<int>(1, 6)(rng), ky = std::uniform_int_distribution<int>(1, 8)(rng);
    LabeledOutcome o;
    for (int i = 0; i < n; ++i) {
      o.truth.push_back(std::uniform_int_distribution<int>(0, kx - 1)(rng));
      o.predicted.push_back(std::uniform_int_distribution<int>(0, ky - 1)(rng));
    }
    EXPECT_NEAR(purity(o), oracle::naive_purity(o.truth, o.predicted), 1e-12);
    EXPECT_NEAR(conditional_entropy(o), oracle::naive_conditional_entropy(o.truth, o.predicted), 1e-12);
    EXPECT_GE(purity(o), 0.0);
    EXPECT_LE(purity(o), 1.0);
    EXPECT_GE(conditional_entropy(o), -1e-15);
    EXPECT_LE(conditional_entropy(o), std::log(kx) + 1e-12);
  }
}

TEST(Metrics, InvariantToRelabelingAndOrder) {
  std::mt19937_64 rng(2);
  LabeledOutcome o;
  for (int i = 0; i < 50; ++i) {
    o.truth.push_back(static_cast<int>(rng() % 4));
    o.predicted.push_back(static_cast<int>(rng() % 5));
  }
  LabeledOutcome renamed = o;
  for (int& y : renamed.predicted) y = 100 - 7 * y;
  for (int& x : renamed.truth) x = x * 3 + 1;
  EXPECT_DOUBLE_EQ(purity(o), purity(renamed));
  EXPECT_NEAR(conditional_entropy(o), conditional_entropy(renamed), 1e-15);

  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  LabeledOutcome shuffled;
  for (std::size_t i : perm) {
    shuffled.truth.push_back(o.truth[i]);
    shuffled.predicted.push_back(o.predicted[i]);
  }
  EXPECT_DOUBLE_EQ(purity(o), purity(shuffled));
  EXPECT_NEAR(conditional_entropy(o), conditional_entropy(shuffled), 1e-14);
}

TEST(Metrics, RefiningPredictionsNeverHurts) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    LabeledOutcome coarse;
    for (int i = 0; i < 40; ++i) {
      coarse.truth.push_back(static_cast<int>(rng() % 3));
      coarse.predicted.push_back(static_cast<int>(rng() % 3));
    }
    LabeledOutcome fine = coarse;
    for (int& y : fine.predicted) y = y * 2 + static_cast<int>(rng() % 2);  // split each cluster
    EXPECT_GE(purity(fine), purity(coarse));
    EXPECT_LE(conditional_entropy(fine), conditional_entropy(coarse) + 1e-12);
  }
}

TEST(Metrics, RejectMismatchedInput) {
  EXPECT_THROW(purity({{}, {}}), ConfigError);
  EXPECT_THROW(conditional_entropy({{0, 1}, {0}}), ConfigError);
  EXPECT_EQ(distinct_count(std::vector<int>{3, 1, 3, 7}), 3);
}

TEST(Synth, ShapeAndSupport) {
  const SyntheticSet s = synth_representations(3, 5, 30, 10, 0.0, 4);
  ASSERT_EQ(s.reps.size(), 15u);
  EXPECT_EQ(s.reps.dim, 30u);
  EXPECT_EQ(s.truth, (std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2}));
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t d = 0; d < 30; ++d) {
      const float v = s.reps.row(i)[d];
      const bool owned = d / 10 == static_cast<std::size_t>(s.truth[i]);
      if (owned) {
        EXPECT_GE(v, 0.3f);
        EXPECT_LT(v, 0.9f);
      } else {
        EXPECT_EQ(v, 0.0f);
      }
    }
  EXPECT_EQ(s.reps.ids[6], "synth_c1_1");
}

TEST(Synth, NoiseIsBoundedAndSeeded) {
  const SyntheticSet a = synth_representations(2, 20, 20, 10, 0.05, 9);
  const SyntheticSet b = synth_representations(2, 20, 20, 10, 0.05, 9);
  const SyntheticSet clean = synth_representations(2, 20, 20, 10, 0.0, 9);
  EXPECT_TRUE(a.reps == b.reps);
  for (float v : a.reps.data) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  // truncation at 3 sigma; cluster 0's prototype is drawn before any noise,
  // so it is the same with and without noise
  for (std::size_t i = 0; i < 20 * a.reps.dim; ++i)
    EXPECT_LE(std::abs(a.reps.data[i] - clean.reps.data[i]), 0.15f + 1e-6f);
  EXPECT_THROW(synth_representations(4, 2, 30, 10, 0.0, 1), ConfigError);
}

TEST(Synth, TexturesAreIntegerValued) {
  for (int k = 0; k < 4; ++k) {
    const GrayImage img = synth_texture(static_cast<TextureKind>(k), 40, 30, 7);
    EXPECT_EQ(img.width, 40);
    EXPECT_EQ(img.height, 30);
    for (float p : img.pixels) {
      EXPECT_EQ(p, std::round(p));
      EXPECT_GE(p, 0.0f);
      EXPECT_LE(p, 255.0f);
    }
  }
}

TEST(Csv, LabelsRoundTrip) {
  const fs::path path = fs::temp_directory_path() / "scenecat_test_labels.csv";
  const std::vector<std::string> ids{"a.png", "b,c.png", "d.jpg"};
  const std::vector<int> labels{2, 0, 11};
  csv::write_labels(path, ids, labels);
  const auto rows = csv::read_labels(path);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].first, "b,c.png");
  EXPECT_EQ(rows[2].second, 11);
  {
    std::ofstream os(path);
    os << "image_id,label\nx.png,notanumber\n";
  }
  EXPECT_THROW(csv::read_labels(path), InputError);
  fs::remove(path);
}

TEST(Csv, MetricsRoundTrip) {
  const fs::path path = fs::temp_directory_path() / "scenecat_test_metrics.csv";
  csv::write_metrics(path, {{"purity", 0.875}, {"conditional_entropy", 0.1234567891}});
  const auto rows = csv::read_metrics(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].second, 0.875);
  EXPECT_NEAR(rows[1].second, 0.1234567891, 1e-10);
  fs::remove(path);
}
