// Apache License, Version 2.0, refer to LICENSE.txt
//
// Grayscale images, regular patch grids and the two patch descriptors:
// a 2x2-cell, 8-bin HOG (32 values, L2-normalized) and a 2x2-cell CS-LBP
// code histogram (64 values, L1-normalized).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "scenecat/error.hpp"

namespace scenecat {

inline constexpr std::size_t kHogDim = 32;
inline constexpr std::size_t kCslbpDim = 64;

using HogDescriptor = std::array<double, kHogDim>;
using CslbpDescriptor = std::array<double, kCslbpDim>;

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // row-major, intensities in [0, 255]

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

// Interleaved 8-bit RGB raster as produced by a decoder.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

// Pixel-domain rectangle of one pyramid block, in coordinates of the image
// it is cut from (the full image or its half-resolution copy).
struct BlockRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  int id = 0;

  bool operator==(const BlockRect&) const = default;
};

struct Patch {
  int x = 0;
  int y = 0;
  int side = 0;
  int block = 0;

  bool operator==(const Patch&) const = default;
};

struct CslbpParams {
  double threshold = 1.0;  // b(x) = 1 iff x > threshold, raw 0..255 scale
  double radius = 2.0;
};

inline GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
    out.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

// 2x2 box filter, output size floor(w/2) x floor(h/2).
inline GrayImage downsample_half(const GrayImage& img) {
  GrayImage out(img.width / 2, img.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double s = static_cast<double>(img.at(2 * x, 2 * y)) + img.at(2 * x + 1, 2 * y) +
                       img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = static_cast<float>(s / 4.0);
    }
  }
  return out;
}

// Regular patch grid inside a block. Sides are visited smallest first, each
// grid row-major, stride round(side * stride_fraction). A block smaller than
// a side simply yields no patches of that side.
inline std::vector<Patch> extract_patches(const BlockRect& block, std::span<const int> sides,
                                          double stride_fraction) {
  if (sides.empty()) throw ConfigError("extract_patches: no patch sides given");
  if (!(stride_fraction > 0.0 && stride_fraction <= 1.0))
    throw ConfigError("extract_patches: stride_fraction must lie in (0, 1]");
  std::vector<int> sorted(sides.begin(), sides.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Patch> out;
  for (int side : sorted) {
    if (side <= 0) throw ConfigError("extract_patches: patch side must be positive");
    if (side > block.width || side > block.height) continue;
    const int stride = std::max(1, static_cast<int>(std::lround(side * stride_fraction)));
    for (int y = 0; y + side <= block.height; y += stride)
      for (int x = 0; x + side <= block.width; x += stride)
        out.push_back({block.x + x, block.y + y, side, block.id});
  }
  return out;
}

namespace detail {

inline void check_patch(const GrayImage& img, const Patch& p) {
  if (p.side < 8) throw ConfigError("descriptor patch side must be >= 8");
  if (p.x < 0 || p.y < 0 || p.x + p.side > img.width || p.y + p.side > img.height)
    throw ConfigError("patch lies outside the image");
}

// Cell index (row-major over the 2x2 grid) of a pixel at patch offset (dx, dy).
inline int cell_of(int dx, int dy, int side) {
  const int half = side / 2;
  return (dy < half ? 0 : 2) + (dx < half ? 0 : 1);
}

}  // namespace detail

// Central-difference gradients (replicated patch borders), unsigned
// orientation in 8 bins over [0, pi), magnitude-weighted hard voting,
// global L2 normalization. Flat patches give all zeros.
inline HogDescriptor hog(const GrayImage& img, const Patch& p) {
  detail::check_patch(img, p);
  HogDescriptor h{};
  const int x_last = p.x + p.side - 1;
  const int y_last = p.y + p.side - 1;
  constexpr double kBinWidth = std::numbers::pi / 8.0;
  for (int y = p.y; y <= y_last; ++y) {
    for (int x = p.x; x <= x_last; ++x) {
      const double gx = 0.5 * (static_cast<double>(img.at(std::min(x + 1, x_last), y)) -
                               img.at(std::max(x - 1, p.x), y));
      const double gy = 0.5 * (static_cast<double>(img.at(x, std::min(y + 1, y_last))) -
                               img.at(x, std::max(y - 1, p.y)));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += std::numbers::pi;
      int bin = static_cast<int>(theta / kBinWidth);
      if (bin >= 8) bin = 0;  // theta == pi folds onto 0
      h[detail::cell_of(x - p.x, y - p.y, p.side) * 8 + bin] += mag;
    }
  }
  double norm = 0.0;
  for (double v : h) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : h) v /= norm;
  return h;
}

// 4-bit CS-LBP code from the center-symmetric differences n_i - n_{i+4}.
inline int cslbp_code(std::span<const double, 4> diffs, double threshold) {
  int code = 0;
  for (int i = 0; i < 4; ++i)
    if (diffs[i] > threshold) code |= 1 << i;
  return code;
}

// CS-LBP code histogram. Each interior pixel (at least ceil(radius) from the
// patch edge) gets code sum_{i<4} b(n_i - n_{i+4}) 2^i over 8 neighbors on a
// circle, bilinearly interpolated. Differences are formed from pixel
// differences only, so a global additive shift leaves codes bit-identical.
inline CslbpDescriptor cslbp(const GrayImage& img, const Patch& p, const CslbpParams& params = {}) {
  detail::check_patch(img, p);
  if (!(params.radius > 0.0)) throw ConfigError("cslbp radius must be positive");
  const int margin = static_cast<int>(std::ceil(params.radius));
  if (p.side <= 2 * margin) throw ConfigError("cslbp radius does not fit inside the patch");

  struct Offset {
    int ix, iy;     // integer part of the sample offset
    double fx, fy;  // fractional part in [0, 1)
  };
  std::array<Offset, 8> offs{};
  for (int i = 0; i < 8; ++i) {
    const double a = i * std::numbers::pi / 4.0;
    double dx = params.radius * std::cos(a);
    double dy = -params.radius * std::sin(a);
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    const double fx0 = std::floor(dx), fy0 = std::floor(dy);
    offs[i] = {static_cast<int>(fx0), static_cast<int>(fy0), dx - fx0, dy - fy0};
  }

  CslbpDescriptor h{};
  std::size_t count = 0;
  for (int y = p.y + margin; y < p.y + p.side - margin; ++y) {
    for (int x = p.x + margin; x < p.x + p.side - margin; ++x) {
      // Each sample = base pixel + interpolation delta; both parts are
      // computed from pixel differences.
      std::array<double, 8> base{};
      std::array<double, 8> delta{};
      for (int i = 0; i < 8; ++i) {
        const Offset& o = offs[i];
        const int sx = x + o.ix, sy = y + o.iy;
        const double v00 = img.at(sx, sy);
        base[i] = v00;
        if (o.fx == 0.0 && o.fy == 0.0) continue;
        const double v10 = o.fx > 0.0 ? img.at(sx + 1, sy) : v00;
        const double v01 = o.fy > 0.0 ? img.at(sx, sy + 1) : v00;
        const double v11 = (o.fx > 0.0 && o.fy > 0.0) ? img.at(sx + 1, sy + 1) : v00;
        delta[i] = o.fx * (v10 - v00) + o.fy * (v01 - v00) + o.fx * o.fy * ((v11 - v10) - (v01 - v00));
      }
      std::array<double, 4> diffs{};
      for (int i = 0; i < 4; ++i) diffs[i] = (base[i] - base[i + 4]) + (delta[i] - delta[i + 4]);
      const int code = cslbp_code(diffs, params.threshold);
      h[detail::cell_of(x - p.x, y - p.y, p.side) * 16 + code] += 1.0;
      ++count;
    }
  }
  for (double& v : h) v /= static_cast<double>(count);
  return h;
}

}  // namespace scenecat
