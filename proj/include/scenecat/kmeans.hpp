// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scenecat/error.hpp"
#include "scenecat/parallel.hpp"

namespace scenecat {

// Row-major set of equal-length descriptor vectors.
struct DescriptorPool {
  std::size_t dim = 0;
  std::vector<double> values;

  explicit DescriptorPool(std::size_t d = 0) : dim(d) {}

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  template <typename Range>
  void push(const Range& r) {
    values.insert(values.end(), std::begin(r), std::end(r));
  }
};

struct KMeansParams {
  std::size_t k = 8;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;
};

struct KMeansResult {
  std::size_t dim = 0;
  std::vector<double> centroids;       // k x dim, row-major
  std::vector<double> inertia_history;  // one entry per assignment step
  std::vector<int> labels;
  int iterations = 0;

  std::span<const double> centroid(std::size_t j) const { return {centroids.data() + j * dim, dim}; }
  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// k-means++ seeding followed by Lloyd iterations until the largest centroid
// shift drops below tol. Empty clusters are reseeded to the point farthest
// from its centroid. The assignment step runs in parallel; every reduction is
// sequential so the result does not depend on the worker count.
inline KMeansResult kmeans(const DescriptorPool& pool, const KMeansParams& params) {
  const std::size_t n = pool.size();
  const std::size_t k = params.k;
  const std::size_t dim = pool.dim;
  if (k == 0) throw ConfigError("kmeans: k must be positive");
  if (n < k)
    throw ConfigError("kmeans: pool has " + std::to_string(n) + " points, fewer than k = " + std::to_string(k));

  std::mt19937_64 rng(params.seed);
  KMeansResult res;
  res.dim = dim;
  res.centroids.assign(k * dim, 0.0);
  auto set_centroid = [&](std::size_t j, std::size_t point) {
    const auto r = pool.row(point);
    std::copy(r.begin(), r.end(), res.centroids.begin() + static_cast<std::ptrdiff_t>(j * dim));
  };

  // k-means++
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  set_centroid(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(pool.row(i), res.centroid(j - 1)));
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (u < nearest[i]) {
          pick = i;
          break;
        }
        u -= nearest[i];
      }
      while (nearest[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    set_centroid(j, pick);
  }

  res.labels.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    parallel_for(n, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      int best_j = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d = squared_distance(pool.row(i), res.centroid(j));
        if (d < best) {
          best = d;
          best_j = static_cast<int>(j);
        }
      }
      res.labels[i] = best_j;
      dist[i] = best;
    });
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    res.inertia_history.push_back(inertia);
    res.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = pool.row(i);
      double* s = sums.data() + static_cast<std::size_t>(res.labels[i]) * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += r[d];
      ++counts[res.labels[i]];
    }
    double max_shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> next(dim);
      if (counts[j] == 0) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (dist[i] > dist[far]) far = i;
        const auto r = pool.row(far);
        next.assign(r.begin(), r.end());
        dist[far] = 0.0;
      } else {
        for (std::size_t d = 0; d < dim; ++d) next[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
      }
      max_shift = std::max(max_shift, std::sqrt(squared_distance(next, res.centroid(j))));
      std::copy(next.begin(), next.end(), res.centroids.begin() + static_cast<std::ptrdiff_t>(j * dim));
    }
    if (max_shift < params.tol) break;
  }
  return res;
}

}  // namespace scenecat
