// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scenecat/error.hpp"
#include "scenecat/imaging.hpp"
#include "scenecat/representation.hpp"

namespace scenecat {

// Ground truth X and prediction Y over the same N images. Label values are
// arbitrary; only equality matters.
struct LabeledOutcome {
  std::vector<int> truth;
  std::vector<int> predicted;

  void check() const {
    if (truth.empty()) throw ConfigError("outcome has no images");
    if (truth.size() != predicted.size()) throw ConfigError("truth and prediction lengths differ");
  }
};

namespace detail {

// Joint counts n(y, x) grouped by predicted cluster y.
inline std::map<int, std::map<int, std::size_t>> joint_counts(const LabeledOutcome& o) {
  std::map<int, std::map<int, std::size_t>> c;
  for (std::size_t i = 0; i < o.truth.size(); ++i) ++c[o.predicted[i]][o.truth[i]];
  return c;
}

}  // namespace detail

// sum_y p(y) max_x p(x|y)
inline double purity(const LabeledOutcome& o) {
  o.check();
  std::size_t hit = 0;
  for (const auto& [y, xs] : detail::joint_counts(o)) {
    std::size_t best = 0;
    for (const auto& [x, n] : xs) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(o.truth.size());
}

// H(X|Y) = sum_y p(y) sum_x p(x|y) log(1/p(x|y)), in nats.
inline double conditional_entropy(const LabeledOutcome& o) {
  o.check();
  const double n = static_cast<double>(o.truth.size());
  double h = 0.0;
  for (const auto& [y, xs] : detail::joint_counts(o)) {
    std::size_t ny = 0;
    for (const auto& [x, c] : xs) ny += c;
    double hy = 0.0;
    for (const auto& [x, c] : xs) {
      const double p = static_cast<double>(c) / static_cast<double>(ny);
      hy -= p * std::log(p);
    }
    h += static_cast<double>(ny) / n * hy;
  }
  return h;
}

inline int distinct_count(std::span<const int> labels) {
  std::vector<int> v(labels.begin(), labels.end());
  std::sort(v.begin(), v.end());
  return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

struct SyntheticSet {
  RepresentationSet reps;
  std::vector<int> truth;
};

// Clusters with disjoint-support prototypes: cluster c owns components
// [c * separation, (c + 1) * separation) with values in [0.3, 0.9). Members
// add Gaussian noise truncated at 3 sigma to every component, clamped into
// [0, 1). Rows are cluster-major.
inline SyntheticSet synth_representations(int n_clusters, int per_cluster, std::size_t dim, std::size_t separation,
                                          double noise, std::uint64_t seed) {
  if (separation == 0) throw ConfigError("separation must be positive");
  if (n_clusters < 1 || per_cluster < 1) throw ConfigError("need at least one cluster and one member");
  if (static_cast<std::size_t>(n_clusters) * separation > dim)
    throw ConfigError("dim too small for disjoint supports");
  if (noise < 0.0) throw ConfigError("noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.3, 0.9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr float kBelowOne = 0.99999994f;

  SyntheticSet out;
  out.reps.dim = dim;
  for (int c = 0; c < n_clusters; ++c) {
    std::vector<double> proto(dim, 0.0);
    for (std::size_t d = c * separation; d < (c + 1) * separation; ++d) proto[d] = level(rng);
    for (int i = 0; i < per_cluster; ++i) {
      std::vector<float> row(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        double z = 0.0;
        if (noise > 0.0) {
          do z = gauss(rng);
          while (std::abs(z) > 3.0);
        }
        row[d] = std::clamp(static_cast<float>(proto[d] + noise * z), 0.0f, kBelowOne);
      }
      out.reps.append("synth_c" + std::to_string(c) + "_" + std::to_string(i), row);
      out.truth.push_back(c);
    }
  }
  return out;
}

enum class TextureKind { kStripes, kChecker, kNoise, kFlat };

// Procedural test texture with a seed-dependent phase, orientation and
// contrast; intensities are integers in [0, 255].
inline GrayImage synth_texture(TextureKind kind, int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(width, height);
  const double angle = u(rng) * std::numbers::pi;
  const double period = 6.0 + 10.0 * u(rng);
  const double phase = u(rng) * 2.0 * std::numbers::pi;
  const double base = 60.0 + 100.0 * u(rng);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = base;
      switch (kind) {
        case TextureKind::kStripes: {
          const double t = (x * std::cos(angle) + y * std::sin(angle)) * 2.0 * std::numbers::pi / period + phase;
          v = 128.0 + 100.0 * std::sin(t);
          break;
        }
        case TextureKind::kChecker: {
          const int cell = static_cast<int>(period);
          v = (((x / cell) + (y / cell)) % 2) ? 40.0 : 210.0;
          break;
        }
        case TextureKind::kNoise:
          v = base + 60.0 * (u(rng) - 0.5);
          break;
        case TextureKind::kFlat:
          break;
      }
      img.at(x, y) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace scenecat
