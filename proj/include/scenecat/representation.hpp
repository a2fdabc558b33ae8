// Apache License, Version 2.0, refer to LICENSE.txt
//
// 9-block spatial-pyramid word responses. Block 0 is the whole image,
// blocks 1-4 the quadrants of the full-resolution image, blocks 5-8 the
// quadrants of the half-resolution (2x2 box-filtered) image; quadrants are
// ordered top-left, top-right, bottom-left, bottom-right. The response vector
// is block-major: component b * m + w holds word w of block b.
//
// Representation matrix file (little-endian):
//   offset 0   8 bytes  magic "SCREPR\0\0"
//   offset 8   u32      format version (1)
//   offset 12  u32      reserved, 0
//   offset 16  u64      n_images
//   offset 24  u64      dim (9 * m)
//   offset 32  f32[]    n_images x dim responses, row-major
// A sidecar text file "<path>.index" lists one image id per line, in row order.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scenecat/binary_io.hpp"
#include "scenecat/codebook.hpp"
#include "scenecat/error.hpp"
#include "scenecat/imaging.hpp"
#include "scenecat/parallel.hpp"

namespace scenecat {

inline constexpr std::size_t kPyramidBlocks = 9;

struct PyramidLayout {
  std::array<BlockRect, kPyramidBlocks> blocks{};

  static bool on_half_resolution(int block_id) { return block_id >= 5; }

  static PyramidLayout for_image(int width, int height) {
    PyramidLayout l;
    l.blocks[0] = {0, 0, width, height, 0};
    auto quadrants = [&](int w, int h, int first_id) {
      const int w1 = w / 2, h1 = h / 2;
      l.blocks[first_id + 0] = {0, 0, w1, h1, first_id + 0};
      l.blocks[first_id + 1] = {w1, 0, w - w1, h1, first_id + 1};
      l.blocks[first_id + 2] = {0, h1, w1, h - h1, first_id + 2};
      l.blocks[first_id + 3] = {w1, h1, w - w1, h - h1, first_id + 3};
    };
    quadrants(width, height, 1);
    quadrants(width / 2, height / 2, 5);
    return l;
  }
};

// psi(count) = tanh(count / s), kept strictly below 1.
inline double saturating_response(double count, double s) {
  if (!(s > 0.0)) throw ConfigError("saturation scale must be positive");
  return std::min(std::tanh(count / s), std::nextafter(1.0, 0.0));
}

struct EncodeConfig {
  PatchConfig patches;
  double saturation = 8.0;
};

// Per-block word counts of one image: counts[b * m + w].
struct BlockCounts {
  std::size_t words = 0;
  std::vector<int> counts;
  std::array<int, kPyramidBlocks> patches{};
};

// Adds the word matches of every patch of `block` (cut from `img`) to counts.
inline int accumulate_block(const GrayImage& img, const BlockRect& block, const Dictionary& dict,
                            const PatchConfig& cfg, std::span<int> block_counts) {
  const auto patches = extract_patches(block, cfg.sides, cfg.stride_fraction);
  for (const Patch& p : patches) {
    const WordAssignment a = assign_word(dict, hog(img, p), cslbp(img, p, cfg.cslbp));
    ++block_counts[a.itw];
    ++block_counts[a.htw];
  }
  return static_cast<int>(patches.size());
}

inline BlockCounts encode_counts(const GrayImage& img, const Dictionary& dict, const PatchConfig& cfg,
                                 const std::string& image_id = "<image>") {
  if (cfg.sides.empty()) throw ConfigError("no patch sides configured");
  const int smallest = *std::min_element(cfg.sides.begin(), cfg.sides.end());
  const PyramidLayout layout = PyramidLayout::for_image(img.width, img.height);
  for (const BlockRect& b : layout.blocks)
    if (b.width < smallest || b.height < smallest)
      throw InputError("image too small for the pyramid: " + image_id + " (" + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ")");
  const GrayImage half = downsample_half(img);
  const std::size_t m = dict.size();
  BlockCounts out;
  out.words = m;
  out.counts.assign(kPyramidBlocks * m, 0);
  for (const BlockRect& b : layout.blocks) {
    const GrayImage& src = PyramidLayout::on_half_resolution(b.id) ? half : img;
    out.patches[b.id] =
        accumulate_block(src, b, dict, cfg, std::span<int>(out.counts).subspan(static_cast<std::size_t>(b.id) * m, m));
  }
  return out;
}

inline std::vector<float> encode(const GrayImage& img, const Dictionary& dict, const EncodeConfig& cfg,
                                 const std::string& image_id = "<image>") {
  const BlockCounts c = encode_counts(img, dict, cfg.patches, image_id);
  std::vector<float> r(c.counts.size());
  constexpr float kBelowOne = 0.99999994f;  // largest float < 1
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = std::min(static_cast<float>(saturating_response(c.counts[i], cfg.saturation)), kBelowOne);
  return r;
}

// Row-major matrix of image representations with their ids.
struct RepresentationSet {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<float> data;

  std::size_t size() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

  void append(const std::string& id, std::span<const float> r) {
    if (ids.empty() && dim == 0) dim = r.size();
    if (r.size() != dim) throw ConfigError("representation length mismatch for " + id);
    ids.push_back(id);
    data.insert(data.end(), r.begin(), r.end());
  }

  bool operator==(const RepresentationSet&) const = default;
};

// Encodes images in parallel; row order follows input order.
inline RepresentationSet encode_all(std::span<const GrayImage> images, std::span<const std::string> ids,
                                    const Dictionary& dict, const EncodeConfig& cfg) {
  std::vector<std::vector<float>> rows(images.size());
  parallel_for(images.size(), [&](std::size_t i) { rows[i] = encode(images[i], dict, cfg, ids[i]); });
  RepresentationSet out;
  out.dim = kPyramidBlocks * dict.size();
  for (std::size_t i = 0; i < rows.size(); ++i) out.append(ids[i], rows[i]);
  return out;
}

inline constexpr char kReprMagic[8] = {'S', 'C', 'R', 'E', 'P', 'R', '\0', '\0'};

inline std::filesystem::path index_path(const std::filesystem::path& matrix) {
  return std::filesystem::path(matrix.string() + ".index");
}

inline void save_representations(const RepresentationSet& reps, const std::filesystem::path& path) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open for writing: " + path.string());
    os.write(kReprMagic, 8);
    binio::put_u32(os, 1);
    binio::put_u32(os, 0);
    binio::put_u64(os, reps.size());
    binio::put_u64(os, reps.dim);
    for (float v : reps.data) binio::put_f32(os, v);
    if (!os) throw InputError("write failed: " + path.string());
  }
  std::ofstream idx(index_path(path));
  for (const auto& id : reps.ids) idx << id << '\n';
  if (!idx) throw InputError("write failed: " + index_path(path).string());
}

inline RepresentationSet load_representations(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open representation file: " + path.string());
  binio::Reader r(is);
  char magic[8];
  r.bytes(magic, 8, "magic");
  if (!std::equal(magic, magic + 8, kReprMagic)) throw FormatError("bad representation magic", 0);
  if (r.u32("version") != 1) throw FormatError("unsupported representation version", 8);
  r.u32("reserved");
  const std::uint64_t n = r.u64("n_images");
  const std::uint64_t dim = r.u64("dim");
  RepresentationSet reps;
  reps.dim = dim;
  reps.data.resize(n * dim);
  for (float& v : reps.data) v = r.f32("responses");
  r.expect_end();

  std::ifstream idx(index_path(path));
  if (!idx) throw InputError("missing index sidecar: " + index_path(path).string());
  std::string line;
  while (std::getline(idx, line))
    if (!line.empty()) reps.ids.push_back(line);
  if (reps.ids.size() != n)
    throw InputError("index sidecar lists " + std::to_string(reps.ids.size()) + " ids for " + std::to_string(n) +
                     " rows");
  return reps;
}

}  // namespace scenecat
