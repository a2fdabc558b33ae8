// Apache License, Version 2.0, refer to LICENSE.txt
//
// Two-type visual-word dictionary. Word ids are dense: ITWs (HOG centroids)
// take 0..n_itw-1, HTWs (CS-LBP centroids) take n_itw..m-1.
//
// Dictionary file layout (all integers and floats little-endian):
//   offset 0   8 bytes  magic "SCDICT\0\0"
//   offset 8   u32      format version (1)
//   offset 12  u32      reserved, 0
//   offset 16  u32      n_itw
//   offset 20  u32      n_htw
//   offset 24  f32[]    n_itw x 32 ITW centroids, then n_htw x 64 HTW centroids
//   then       u64      build seed
//   then       4 bytes  footer magic "SEED"

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scenecat/binary_io.hpp"
#include "scenecat/error.hpp"
#include "scenecat/imaging.hpp"
#include "scenecat/kmeans.hpp"
#include "scenecat/parallel.hpp"

namespace scenecat {

enum class WordKind { kItw, kHtw };

inline const char* to_string(WordKind k) { return k == WordKind::kItw ? "ITW" : "HTW"; }

struct VisualWord {
  int id = 0;
  WordKind kind = WordKind::kItw;
  std::span<const float> centroid;
};

struct Dictionary {
  std::size_t n_itw = 0;
  std::size_t n_htw = 0;
  std::vector<float> itw;  // n_itw x kHogDim
  std::vector<float> htw;  // n_htw x kCslbpDim
  std::uint64_t seed = 0;

  std::size_t size() const { return n_itw + n_htw; }

  VisualWord word(int id) const {
    const auto uid = static_cast<std::size_t>(id);
    if (uid < n_itw) return {id, WordKind::kItw, {itw.data() + uid * kHogDim, kHogDim}};
    const std::size_t j = uid - n_itw;
    return {id, WordKind::kHtw, {htw.data() + j * kCslbpDim, kCslbpDim}};
  }

  WordKind kind_of(int id) const { return static_cast<std::size_t>(id) < n_itw ? WordKind::kItw : WordKind::kHtw; }

  bool operator==(const Dictionary&) const = default;
};

// Global word ids matched by one patch: exactly one of each kind.
struct WordAssignment {
  int itw = 0;
  int htw = 0;

  bool operator==(const WordAssignment&) const = default;
};

namespace detail {

// Index of the nearest float centroid; ties go to the lowest index.
template <std::size_t Dim>
int nearest_centroid(const std::vector<float>& centroids, std::size_t count, const std::array<double, Dim>& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    const float* c = centroids.data() + j * Dim;
    double d = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) {
      const double t = x[i] - static_cast<double>(c[i]);
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace detail

inline WordAssignment assign_word(const Dictionary& dict, const HogDescriptor& h, const CslbpDescriptor& b) {
  if (dict.n_itw == 0 || dict.n_htw == 0) throw ConfigError("assign_word: dictionary lacks a word kind");
  return {detail::nearest_centroid(dict.itw, dict.n_itw, h),
          static_cast<int>(dict.n_itw) + detail::nearest_centroid(dict.htw, dict.n_htw, b)};
}

struct PatchConfig {
  std::vector<int> sides{16, 24, 32};
  double stride_fraction = 0.5;
  CslbpParams cslbp;
};

struct TrainingPools {
  DescriptorPool itw{kHogDim};
  DescriptorPool htw{kCslbpDim};
};

// Random patch positions and sides, per_image draws per image from an
// image-specific stream of `seed`. Flat (all-zero) HOG patches are left out of
// the ITW pool. A pool over `cap` entries is reduced to a seeded uniform
// subset that keeps the original order.
inline TrainingPools sample_training_patches(std::span<const GrayImage> images, std::size_t per_image,
                                             std::uint64_t seed, const PatchConfig& cfg = {},
                                             std::size_t cap = 200000) {
  if (per_image == 0) throw ConfigError("sample_training_patches: per_image must be >= 1");
  std::vector<TrainingPools> per(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const GrayImage& img = images[i];
    std::vector<int> fitting;
    for (int s : cfg.sides)
      if (s <= img.width && s <= img.height) fitting.push_back(s);
    if (fitting.empty()) return;
    std::mt19937_64 rng(mix_seed(seed, i));
    for (std::size_t d = 0; d < per_image; ++d) {
      const int side = fitting[std::uniform_int_distribution<std::size_t>(0, fitting.size() - 1)(rng)];
      const int x = std::uniform_int_distribution<int>(0, img.width - side)(rng);
      const int y = std::uniform_int_distribution<int>(0, img.height - side)(rng);
      const Patch p{x, y, side, 0};
      const HogDescriptor h = hog(img, p);
      if (std::any_of(h.begin(), h.end(), [](double v) { return v != 0.0; })) per[i].itw.push(h);
      per[i].htw.push(cslbp(img, p, cfg.cslbp));
    }
  });

  TrainingPools out;
  for (const auto& p : per) {
    out.itw.values.insert(out.itw.values.end(), p.itw.values.begin(), p.itw.values.end());
    out.htw.values.insert(out.htw.values.end(), p.htw.values.begin(), p.htw.values.end());
  }
  auto subsample = [&](DescriptorPool& pool, std::uint64_t stream) {
    const std::size_t n = pool.size();
    if (n <= cap) return;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, stream));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    DescriptorPool kept(pool.dim);
    for (std::size_t i : idx) kept.push(pool.row(i));
    pool = std::move(kept);
  };
  subsample(out.itw, 0xA11CE);
  subsample(out.htw, 0xB0B);
  return out;
}

struct DictionaryParams {
  std::size_t n_itw = 500;
  std::size_t n_htw = 500;
  std::size_t per_image = 200;
  std::size_t pool_cap = 200000;
  std::uint64_t seed = 0;
  int kmeans_iters = 100;
  double kmeans_tol = 1e-6;
  PatchConfig patches;
};

struct DictionaryBuildReport {
  std::size_t itw_pool = 0;
  std::size_t htw_pool = 0;
  double itw_inertia = 0.0;
  double htw_inertia = 0.0;
};

inline Dictionary build_dictionary(std::span<const GrayImage> images, const DictionaryParams& params,
                                   DictionaryBuildReport* report = nullptr) {
  const TrainingPools pools =
      sample_training_patches(images, params.per_image, params.seed, params.patches, params.pool_cap);
  const KMeansResult itw =
      kmeans(pools.itw, {params.n_itw, mix_seed(params.seed, 1), params.kmeans_iters, params.kmeans_tol});
  const KMeansResult htw =
      kmeans(pools.htw, {params.n_htw, mix_seed(params.seed, 2), params.kmeans_iters, params.kmeans_tol});
  Dictionary d;
  d.n_itw = params.n_itw;
  d.n_htw = params.n_htw;
  d.itw.assign(itw.centroids.begin(), itw.centroids.end());
  d.htw.assign(htw.centroids.begin(), htw.centroids.end());
  d.seed = params.seed;
  if (report) *report = {pools.itw.size(), pools.htw.size(), itw.inertia(), htw.inertia()};
  return d;
}

inline constexpr char kDictMagic[8] = {'S', 'C', 'D', 'I', 'C', 'T', '\0', '\0'};
inline constexpr std::uint32_t kDictVersion = 1;

inline void write_dictionary(const Dictionary& d, std::ostream& os) {
  os.write(kDictMagic, 8);
  binio::put_u32(os, kDictVersion);
  binio::put_u32(os, 0);
  binio::put_u32(os, static_cast<std::uint32_t>(d.n_itw));
  binio::put_u32(os, static_cast<std::uint32_t>(d.n_htw));
  for (float v : d.itw) binio::put_f32(os, v);
  for (float v : d.htw) binio::put_f32(os, v);
  binio::put_u64(os, d.seed);
  os.write("SEED", 4);
}

inline Dictionary read_dictionary(std::istream& is) {
  binio::Reader r(is);
  char magic[8];
  r.bytes(magic, 8, "magic");
  if (!std::equal(magic, magic + 8, kDictMagic)) throw FormatError("bad dictionary magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kDictVersion) throw FormatError("unsupported dictionary version " + std::to_string(version), 8);
  r.u32("reserved");
  Dictionary d;
  d.n_itw = r.u32("n_itw");
  d.n_htw = r.u32("n_htw");
  if (d.n_itw == 0 || d.n_htw == 0) throw FormatError("dictionary has an empty word kind", 16);
  d.itw.resize(d.n_itw * kHogDim);
  for (float& v : d.itw) v = r.f32("ITW centroid");
  d.htw.resize(d.n_htw * kCslbpDim);
  for (float& v : d.htw) v = r.f32("HTW centroid");
  d.seed = r.u64("seed footer");
  char foot[4];
  const std::uint64_t foot_at = r.offset();
  r.bytes(foot, 4, "footer magic");
  if (std::string(foot, 4) != "SEED") throw FormatError("bad dictionary footer magic", foot_at);
  r.expect_end();
  return d;
}

inline void save_dictionary(const Dictionary& d, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  write_dictionary(d, os);
  if (!os) throw InputError("write failed: " + path.string());
}

inline Dictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open dictionary: " + path.string());
  return read_dictionary(is);
}

}  // namespace scenecat
