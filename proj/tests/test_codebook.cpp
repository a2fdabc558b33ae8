// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "scenecat/codebook.hpp"
#include "scenecat/evaluation.hpp"

using namespace scenecat;

namespace {

Dictionary random_dictionary(std::size_t n_itw, std::size_t n_htw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Dictionary d;
  d.n_itw = n_itw;
  d.n_htw = n_htw;
  d.itw.resize(n_itw * kHogDim);
  d.htw.resize(n_htw * kCslbpDim);
  for (float& v : d.itw) v = u(rng);
  for (float& v : d.htw) v = u(rng);
  d.seed = seed;
  return d;
}

template <std::size_t Dim>
int linear_scan(const std::vector<float>& c, std::size_t count, const std::array<double, Dim>& x) {
  int best = -1;
  double best_d = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) d += std::pow(x[i] - c[j * Dim + i], 2);
    if (best < 0 || d < best_d) {
      best = static_cast<int>(j);
      best_d = d;
    }
  }
  return best;
}

std::string serialize(const Dictionary& d) {
  std::ostringstream os(std::ios::binary);
  write_dictionary(d, os);
  return os.str();
}

Dictionary parse(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_dictionary(is);
}

}  // namespace

TEST(KMeans, ExactlyKDistinctPointsGiveZeroInertia) {
  DescriptorPool pool(2);
  for (double x : {0.0, 1.0, 5.0, 9.0, 20.0}) pool.push(std::array<double, 2>{x, -x});
  const KMeansResult r = kmeans(pool, {5, 3, 50, 1e-9});
  EXPECT_EQ(r.inertia(), 0.0);
}

TEST(KMeans, RecoversSeparatedBlobs) {
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.5);
  DescriptorPool pool(2);
  for (int i = 0; i < 300; ++i) pool.push(std::array<double, 2>{centers[i % 3][0] + g(rng), centers[i % 3][1] + g(rng)});
  const KMeansResult r = kmeans(pool, {3, 1, 100, 1e-9});
  for (const auto& c : centers) {
    double best = 1e9;
    for (std::size_t j = 0; j < 3; ++j)
      best = std::min(best, std::hypot(r.centroid(j)[0] - c[0], r.centroid(j)[1] - c[1]));
    EXPECT_LT(best, 0.2);
  }
  // each blob in one cluster
  for (int i = 3; i < 300; ++i) EXPECT_EQ(r.labels[i], r.labels[i % 3]);
}

TEST(KMeans, InertiaNeverIncreases) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DescriptorPool pool(4);
  for (int i = 0; i < 500; ++i) pool.push(std::array<double, 4>{u(rng), u(rng), u(rng), u(rng)});
  const KMeansResult r = kmeans(pool, {12, 2, 100, 0.0});
  ASSERT_GE(r.inertia_history.size(), 2u);
  for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
    EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1 + 1e-12));
}

TEST(KMeans, DeterministicForSeed) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DescriptorPool pool(3);
  for (int i = 0; i < 200; ++i) pool.push(std::array<double, 3>{u(rng), u(rng), u(rng)});
  EXPECT_EQ(kmeans(pool, {7, 5}).centroids, kmeans(pool, {7, 5}).centroids);
}

TEST(KMeans, PoolSmallerThanKIsAnError) {
  DescriptorPool pool(2);
  pool.push(std::array<double, 2>{0, 0});
  EXPECT_THROW(kmeans(pool, {2, 0}), ConfigError);
}

TEST(AssignWord, TieGoesToLowestId) {
  Dictionary d = random_dictionary(6, 2, 1);
  HogDescriptor h{};
  for (std::size_t i = 0; i < kHogDim; ++i) {
    d.itw[3 * kHogDim + i] = 0.25f;
    d.itw[5 * kHogDim + i] = 0.25f;
    h[i] = 0.25;
  }
  const WordAssignment a = assign_word(d, h, CslbpDescriptor{});
  EXPECT_EQ(a.itw, 3);
  EXPECT_GE(a.htw, 6);
  EXPECT_LT(a.htw, 8);
}

TEST(AssignWord, MatchesLinearScan) {
  const Dictionary d = random_dictionary(40, 30, 7);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    HogDescriptor h;
    CslbpDescriptor b;
    for (double& v : h) v = u(rng);
    for (double& v : b) v = u(rng);
    const WordAssignment a = assign_word(d, h, b);
    EXPECT_EQ(a.itw, linear_scan(d.itw, d.n_itw, h));
    EXPECT_EQ(a.htw, 40 + linear_scan(d.htw, d.n_htw, b));
    EXPECT_EQ(d.kind_of(a.itw), WordKind::kItw);
    EXPECT_EQ(d.kind_of(a.htw), WordKind::kHtw);
  }
}

TEST(DictionaryFile, RoundTripIsBitExact) {
  Dictionary d = random_dictionary(5, 3, 99);
  d.itw[0] = -0.0f;
  d.htw[1] = std::nextafter(1.0f, 0.0f);
  const std::string bytes = serialize(d);
  EXPECT_EQ(bytes.size(), 24u + 4u * (5 * kHogDim + 3 * kCslbpDim) + 12u);
  const Dictionary back = parse(bytes);
  EXPECT_TRUE(back == d);
  EXPECT_EQ(serialize(back), bytes);
  EXPECT_TRUE(std::signbit(back.itw[0]));
}

TEST(DictionaryFile, SaveAndLoadThroughDisk) {
  const Dictionary d = random_dictionary(4, 4, 3);
  const auto path = std::filesystem::temp_directory_path() / "scenecat_test_dict.bin";
  save_dictionary(d, path);
  EXPECT_TRUE(load_dictionary(path) == d);
  std::filesystem::remove(path);
}

TEST(DictionaryFile, MalformedInputsReportOffsets) {
  const std::string good = serialize(random_dictionary(2, 2, 1));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  try {
    parse(bad_magic);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }

  std::string bad_version = good;
  bad_version[8] = 7;
  EXPECT_THROW(parse(bad_version), FormatError);

  EXPECT_THROW(parse(good.substr(0, good.size() - 10)), FormatError);

  std::string bad_footer = good;
  bad_footer[bad_footer.size() - 1] = 'X';
  try {
    parse(bad_footer);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), good.size() - 4);
  }

  EXPECT_THROW(parse(good + "junk"), FormatError);
  EXPECT_THROW(load_dictionary("/nonexistent/dict.bin"), InputError);
}

TEST(TrainingPatches, DeterministicAndFlatPatchesExcluded) {
  std::vector<GrayImage> images;
  images.push_back(synth_texture(TextureKind::kStripes, 64, 64, 1));
  images.push_back(synth_texture(TextureKind::kNoise, 64, 64, 2));
  const TrainingPools a = sample_training_patches(images, 30, 11);
  const TrainingPools b = sample_training_patches(images, 30, 11);
  EXPECT_EQ(a.itw.values, b.itw.values);
  EXPECT_EQ(a.htw.values, b.htw.values);
  EXPECT_EQ(a.htw.size(), 60u);

  std::vector<GrayImage> flat{GrayImage(64, 64, 128.0f)};
  const TrainingPools f = sample_training_patches(flat, 20, 1);
  EXPECT_EQ(f.itw.size(), 0u);
  EXPECT_EQ(f.htw.size(), 20u);
}

TEST(TrainingPatches, CapSubsamples) {
  std::vector<GrayImage> images{synth_texture(TextureKind::kNoise, 64, 64, 5)};
  const TrainingPools p = sample_training_patches(images, 100, 3, {}, 25);
  EXPECT_EQ(p.htw.size(), 25u);
  EXPECT_LE(p.itw.size(), 25u);
}

TEST(BuildDictionary, SmallCorpus) {
  std::vector<GrayImage> images;
  for (int k = 0; k < 4; ++k) images.push_back(synth_texture(static_cast<TextureKind>(k), 64, 64, 10 + k));
  DictionaryParams p;
  p.n_itw = 4;
  p.n_htw = 6;
  p.per_image = 40;
  p.seed = 21;
  DictionaryBuildReport report;
  const Dictionary d = build_dictionary(images, p, &report);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.itw.size(), 4 * kHogDim);
  EXPECT_EQ(d.htw.size(), 6 * kCslbpDim);
  EXPECT_EQ(report.htw_pool, 160u);
  EXPECT_TRUE(build_dictionary(images, p) == d);
}
