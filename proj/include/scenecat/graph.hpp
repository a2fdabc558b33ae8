// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scenecat/error.hpp"
#include "scenecat/parallel.hpp"
#include "scenecat/representation.hpp"

namespace scenecat {

struct Edge {
  int s = 0;  // s < t
  int t = 0;
  double q = 0.0;  // turn-on probability in (0, 1]

  bool operator==(const Edge&) const = default;
};

struct Incidence {
  int neighbor = 0;
  int edge = 0;
};

// Undirected sparse graph, one vertex per image.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;

  // Edges must satisfy s < t without duplicates; they are kept in the given order.
  SimilarityGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), adj_(static_cast<std::size_t>(n)) {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      if (e.s < 0 || e.t >= n || e.s >= e.t) throw ConfigError("graph edge must satisfy 0 <= s < t < n");
      if (!(e.q > 0.0 && e.q <= 1.0)) throw ConfigError("edge turn-on probability must lie in (0, 1]");
      adj_[e.s].push_back({e.t, static_cast<int>(i)});
      adj_[e.t].push_back({e.s, static_cast<int>(i)});
    }
  }

  int vertex_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Incidence> neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adj_;
};

struct GraphParams {
  double tau = 0.2;
  int max_neighbors = 6;
  double smoothing = 1e-6;
};

// Additive smoothing then renormalization to a probability vector.
inline std::vector<double> smoothed_distribution(std::span<const float> r, double eps) {
  std::vector<double> p(r.size());
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    p[i] = static_cast<double>(r[i]) + eps;
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

// KL(p||q) + KL(q||p) = sum (p - q)(log p - log q), given log p and log q.
inline double symmetric_kl_from_logs(std::span<const double> p, std::span<const double> logp,
                                     std::span<const double> q, std::span<const double> logq) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += (p[i] - q[i]) * (logp[i] - logq[i]);
  return d;
}

inline double edge_probability(std::span<const float> a, std::span<const float> b, double tau,
                               double smoothing = 1e-6) {
  if (a.size() != b.size()) throw ConfigError("edge_probability: representation lengths differ");
  if (!(tau > 0.0)) throw ConfigError("edge_probability: tau must be positive");
  const auto p = smoothed_distribution(a, smoothing);
  const auto q = smoothed_distribution(b, smoothing);
  std::vector<double> lp(p.size()), lq(q.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    lp[i] = std::log(p[i]);
    lq[i] = std::log(q[i]);
  }
  return std::exp(-tau * symmetric_kl_from_logs(p, lp, q, lq));
}

// All-pairs turn-on probabilities, then an edge (s, t) is kept iff t is among
// the max_neighbors most probable neighbors of s or vice versa. Ranking is by
// q descending, ties to the lower vertex index. Rows are processed in tiles
// so each neighbor row is streamed once per tile.
inline SimilarityGraph build_graph(const RepresentationSet& reps, const GraphParams& params = {}) {
  const int n = static_cast<int>(reps.size());
  if (n < 2) throw ConfigError("build_graph: need at least 2 images");
  if (params.max_neighbors < 1) throw ConfigError("build_graph: max_neighbors must be >= 1");
  if (!(params.tau > 0.0)) throw ConfigError("build_graph: tau must be positive");
  const std::size_t dim = reps.dim;

  std::vector<double> prob(static_cast<std::size_t>(n) * dim), logp(prob.size());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const auto p = smoothed_distribution(reps.row(i), params.smoothing);
    for (std::size_t d = 0; d < dim; ++d) {
      prob[i * dim + d] = p[d];
      logp[i * dim + d] = std::log(p[d]);
    }
  });
  auto span_of = [&](const std::vector<double>& v, int i) {
    return std::span<const double>(v.data() + static_cast<std::size_t>(i) * dim, dim);
  };

  constexpr int kTile = 8;
  const int tiles = (n + kTile - 1) / kTile;
  const int k = std::min(params.max_neighbors, n - 1);
  std::vector<std::vector<std::pair<int, double>>> top(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t tile) {
    const int lo = static_cast<int>(tile) * kTile;
    const int hi = std::min(n, lo + kTile);
    std::vector<double> q(static_cast<std::size_t>(kTile) * n);
    for (int t = 0; t < n; ++t) {
      const auto pt = span_of(prob, t), lt = span_of(logp, t);
      for (int s = lo; s < hi; ++s) {
        const double d = symmetric_kl_from_logs(span_of(prob, s), span_of(logp, s), pt, lt);
        q[static_cast<std::size_t>(s - lo) * n + t] = std::exp(-params.tau * d);
      }
    }
    for (int s = lo; s < hi; ++s) {
      std::vector<std::pair<int, double>> cand;
      cand.reserve(static_cast<std::size_t>(n) - 1);
      for (int t = 0; t < n; ++t)
        if (t != s) cand.emplace_back(t, q[static_cast<std::size_t>(s - lo) * n + t]);
      auto better = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
      std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), better);
      cand.resize(static_cast<std::size_t>(k));
      top[static_cast<std::size_t>(s)] = std::move(cand);
    }
  });

  std::vector<Edge> edges;
  for (int s = 0; s < n; ++s)
    for (const auto& [t, q] : top[static_cast<std::size_t>(s)]) {
      // exp(-tau * D) can underflow to 0 for very distant pairs.
      edges.push_back({std::min(s, t), std::max(s, t), std::max(q, std::numeric_limits<double>::min())});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.s != b.s ? a.s < b.s : a.t < b.t; });
  edges.erase(std::unique(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.s == b.s && a.t == b.t; }),
              edges.end());
  return SimilarityGraph(n, std::move(edges));
}

// Debug dump: one "s t q_e" line per edge, q_e with 6 decimals.
inline void write_edge_list(const SimilarityGraph& g, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  char buf[64];
  for (const Edge& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%d %d %.6f\n", e.s, e.t, e.q);
    os << buf;
  }
}

}  // namespace scenecat
