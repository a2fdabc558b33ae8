// Apache License, Version 2.0, refer to LICENSE.txt
//
// Graph-partition MCMC over the similarity graph: Swendsen-Wang cuts (one
// connected component relabeled per step) and its compositional variant
// (connected components are grouped into combinatorial clusters on a
// higher-level graph and several clusters are relabeled in one move).
//
// Target: p(S) proportional to exp(-energy), energy = beta K - sum_k sum_{I in
// category k} log phi_k(I), where phi_k is re-pursued whenever category k
// gains or loses members.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scenecat/category_model.hpp"
#include "scenecat/error.hpp"
#include "scenecat/graph.hpp"
#include "scenecat/representation.hpp"

namespace scenecat {

// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    size_.assign(n, 1);
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  // Dense component ids numbered by first appearance in index order.
  std::vector<int> component_ids(int* count = nullptr) {
    const int n = static_cast<int>(parent_.size());
    std::vector<int> root_id(parent_.size(), -1), out(parent_.size());
    int next = 0;
    for (int i = 0; i < n; ++i) {
      const int r = find(i);
      if (root_id[r] < 0) root_id[r] = next++;
      out[i] = root_id[r];
    }
    if (count) *count = next;
    return out;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

// Category labels dense in 0..K-1 with member lists (ascending vertex order).
struct Partition {
  std::vector<int> labels;
  std::vector<std::vector<int>> members;

  int category_count() const { return static_cast<int>(members.size()); }

  // Relabels arbitrary non-negative labels densely, by first appearance.
  static Partition from_labels(std::span<const int> raw) {
    Partition p;
    p.labels.resize(raw.size());
    std::vector<int> remap;
    for (std::size_t v = 0; v < raw.size(); ++v) {
      const int r = raw[v];
      if (r < 0) throw ConfigError("partition labels must be non-negative");
      if (static_cast<std::size_t>(r) >= remap.size()) remap.resize(static_cast<std::size_t>(r) + 1, -1);
      if (remap[r] < 0) {
        remap[r] = static_cast<int>(p.members.size());
        p.members.emplace_back();
      }
      p.labels[v] = remap[r];
      p.members[remap[r]].push_back(static_cast<int>(v));
    }
    return p;
  }

  // Dense labels, disjoint cover, members consistent with labels.
  bool valid() const {
    std::vector<int> seen(labels.size(), 0);
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (members[k].empty()) return false;
      for (int v : members[k]) {
        if (v < 0 || static_cast<std::size_t>(v) >= labels.size()) return false;
        if (labels[v] != static_cast<int>(k) || seen[v]++) return false;
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }
};

// Connected components of the "on" subgraph: cp_of[v] and member lists.
struct ComponentSet {
  std::vector<int> cp_of;
  std::vector<std::vector<int>> cps;
};

struct CpEdge {
  int a = 0;  // a < b
  int b = 0;
  double q = 0.0;
};

struct CpGraph {
  int cp_count = 0;
  std::vector<CpEdge> edges;
};

namespace detail {

inline ComponentSet components_from(UnionFind& uf) {
  ComponentSet out;
  int count = 0;
  out.cp_of = uf.component_ids(&count);
  out.cps.assign(static_cast<std::size_t>(count), {});
  for (std::size_t v = 0; v < out.cp_of.size(); ++v) out.cps[out.cp_of[v]].push_back(static_cast<int>(v));
  return out;
}

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace detail

// Each edge joining two same-labeled vertices is turned on with probability
// q_e; edges across labels stay off. Components of the on-subgraph are the CPs.
inline ComponentSet sample_cps(const SimilarityGraph& g, std::span<const int> labels, std::mt19937_64& rng) {
  UnionFind uf(static_cast<std::size_t>(g.vertex_count()));
  for (const Edge& e : g.edges()) {
    if (labels[e.s] != labels[e.t]) continue;
    if (detail::uniform01(rng) < e.q) uf.unite(e.s, e.t);
  }
  return detail::components_from(uf);
}

// CP-level graph: q_CP = 1 - prod(1 - q_e) over every G-edge between the two
// CPs, whatever the labels of its endpoints.
inline CpGraph build_cp_graph(const SimilarityGraph& g, const ComponentSet& cps) {
  std::vector<CpEdge> raw;
  for (const Edge& e : g.edges()) {
    const int a = cps.cp_of[e.s], b = cps.cp_of[e.t];
    if (a == b) continue;
    raw.push_back({std::min(a, b), std::max(a, b), std::log1p(-e.q)});
  }
  std::sort(raw.begin(), raw.end(), [](const CpEdge& x, const CpEdge& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
  CpGraph out;
  out.cp_count = static_cast<int>(cps.cps.size());
  for (const CpEdge& e : raw) {
    if (!out.edges.empty() && out.edges.back().a == e.a && out.edges.back().b == e.b)
      out.edges.back().q += e.q;
    else
      out.edges.push_back(e);
  }
  for (CpEdge& e : out.edges) e.q = -std::expm1(e.q);
  return out;
}

// Turns CP-graph edges on with probability q_CP; components of the result,
// as lists of CP ids, are the combinatorial clusters.
inline std::vector<std::vector<int>> combinatorial_clusters(const CpGraph& cg, std::mt19937_64& rng) {
  UnionFind uf(static_cast<std::size_t>(cg.cp_count));
  for (const CpEdge& e : cg.edges)
    if (detail::uniform01(rng) < e.q) uf.unite(e.a, e.b);
  return detail::components_from(uf).cps;
}

// Picks min(count, available) distinct indices uniformly at random.
inline std::vector<int> select_uniform(int available, int count, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(available));
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(available, count);
  for (int i = 0; i < take; ++i) {
    const int j = std::uniform_int_distribution<int>(i, available - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

// Samples combinatorial clusters on the CP graph and selects n_select of them
// (fewer when not enough exist). Each returned cluster is a vertex list.
inline std::vector<std::vector<int>> sample_combinatorial_clusters(const CpGraph& cg, const ComponentSet& cps,
                                                                   std::mt19937_64& rng, int n_select) {
  if (n_select < 1) throw ConfigError("n_select must be >= 1");
  const auto clusters = combinatorial_clusters(cg, rng);
  std::vector<std::vector<int>> out;
  for (int c : select_uniform(static_cast<int>(clusters.size()), n_select, rng)) {
    std::vector<int> verts;
    for (int cp : clusters[c]) verts.insert(verts.end(), cps.cps[cp].begin(), cps.cps[cp].end());
    std::sort(verts.begin(), verts.end());
    out.push_back(std::move(verts));
  }
  return out;
}

enum class SamplerMode { kSwc, kCswc };
enum class InitMode { kSingletons, kComponents };

inline const char* to_string(SamplerMode m) { return m == SamplerMode::kSwc ? "swc" : "cswc"; }

struct SamplerConfig {
  int max_iters = 5000;
  double beta = 300.0;
  int max_features = 40;  // 0 disables the likelihood (empty models)
  SelectionRule rule = SelectionRule::kInformationGain;
  SamplerMode mode = SamplerMode::kCswc;
  int min_select = 1;
  int max_select = 3;
  InitMode init = InitMode::kSingletons;
  double warm_start_threshold = 0.5;  // kComponents: keep edges with q_e >= this
  int plateau_iters = 0;              // stop after this many iterations without improvement; 0 = off
  bool record_trace = true;
  int log_every = 0;                  // progress line to stderr every N iterations; 0 = silent
  int verify_every = 0;               // check incremental energy every N iterations; 0 = off
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and >= 0");
    if (max_features < 0) throw ConfigError("max_features must be >= 0");
    if (min_select < 1 || max_select < min_select) throw ConfigError("need 1 <= min_select <= max_select");
    if (plateau_iters < 0 || log_every < 0 || verify_every < 0) throw ConfigError("negative iteration stride");
    if (!(warm_start_threshold > 0.0 && warm_start_threshold <= 1.0))
      throw ConfigError("warm_start_threshold must lie in (0, 1]");
  }
};

// One relabeled vertex group. new_label == K (current category count) means
// the fresh label; all groups choosing it join the same new category.
struct ClusterMove {
  std::vector<int> vertices;
  int new_label = 0;
};

struct ProposalEvaluation {
  bool identity = false;   // no vertex changes label
  double log_cut_ratio = 0.0;
  double log_label_ratio = 0.0;
  double energy_a = 0.0;
  double energy_b = 0.0;
  int k_b = 0;

  // log of the Metropolis-Hastings ratio before the min(1, .).
  double log_ratio() const { return log_cut_ratio + log_label_ratio + (energy_a - energy_b); }
  double acceptance() const { return identity ? 1.0 : std::min(1.0, std::exp(log_ratio())); }
};

struct TraceRecord {
  int iteration = 0;
  double energy = 0.0;
  int k = 0;
  bool accepted = false;
  double best_energy = 0.0;
};

struct Solution {
  Partition partition;
  std::vector<CategoryModel> models;
  double energy = 0.0;
};

struct RunResult {
  Solution best;
  Solution final_state;
  std::vector<TraceRecord> trace;
  int iterations = 0;
  int accepted = 0;
};

// Energy of a solution from per-image log phi values.
inline double energy(const Solution& s, const RepresentationSet& reps, double beta) {
  double e = beta * s.partition.category_count();
  for (int k = 0; k < s.partition.category_count(); ++k)
    for (int v : s.partition.members[k]) e -= log_phi(s.models[k], reps.row(static_cast<std::size_t>(v)));
  return e;
}

class Sampler {
 public:
  Sampler(const SimilarityGraph& graph, const RepresentationSet& reps, SamplerConfig config)
      : graph_(graph), reps_(reps), config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
    if (static_cast<std::size_t>(graph_.vertex_count()) != reps_.size())
      throw ConfigError("graph vertex count does not match the number of representations");
    if (likelihood_on()) background_ = background_expectations(reps_);
    init_default();
  }

  const SamplerConfig& config() const { return config_; }
  const Partition& partition() const { return part_; }
  std::span<const int> labels() const { return part_.labels; }
  int category_count() const { return part_.category_count(); }
  double current_energy() const { return energy_; }
  const std::vector<CategoryModel>& models() const { return models_; }
  const BackgroundModel& background() const { return background_; }
  std::mt19937_64& rng() { return rng_; }

  // Replaces the state; labels may be any non-negative ints.
  void set_labels(std::span<const int> raw) {
    if (raw.size() != reps_.size()) throw ConfigError("label vector length does not match the graph");
    part_ = Partition::from_labels(raw);
    const int k = part_.category_count();
    sums_.assign(static_cast<std::size_t>(k), {});
    models_.assign(static_cast<std::size_t>(k), {});
    loglik_.assign(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) refresh_category(c);
    energy_ = total_energy();
  }

  Solution solution() const { return {part_, models_, energy_}; }

  // Energy rebuilt from the member lists, independent of incremental state.
  double recompute_energy() const {
    double e = config_.beta * part_.category_count();
    if (!likelihood_on()) return e;
    for (const auto& members : part_.members) {
      const auto sum = member_sum(members);
      const CategoryModel m = model_for(sum, members.size());
      e -= category_log_likelihood(m, sum, members.size());
    }
    return e;
  }

  // Scores a proposed move against the current state without changing it.
  ProposalEvaluation evaluate(const std::vector<ClusterMove>& moves) const {
    ProposalEvaluation ev;
    const int k_a = part_.category_count();
    ev.energy_a = energy_;
    ev.k_b = k_a;
    const std::size_t n = part_.labels.size();

    std::vector<int> new_label(n, -1);
    std::vector<int> cluster_of(n, -1);
    for (std::size_t c = 0; c < moves.size(); ++c)
      for (int v : moves[c].vertices) {
        cluster_of[v] = static_cast<int>(c);
        new_label[v] = moves[c].new_label;
      }
    bool identity = true;
    for (const auto& mv : moves)
      for (int v : mv.vertices)
        if (mv.new_label != part_.labels[v]) identity = false;
    if (identity) {
      ev.identity = true;
      ev.energy_b = energy_;
      return ev;
    }
    auto label_b = [&](int u) { return new_label[u] >= 0 ? new_label[u] : part_.labels[u]; };

    // Cuts: edges from the cluster to same-labeled outside vertices.
    for (std::size_t c = 0; c < moves.size(); ++c) {
      const int target = moves[c].new_label;
      for (int v : moves[c].vertices) {
        for (const Incidence& inc : graph_.neighbors(v)) {
          const int u = inc.neighbor;
          if (cluster_of[u] == static_cast<int>(c)) continue;
          const double l1mq = std::log1p(-graph_.edges()[inc.edge].q);
          if (part_.labels[u] == part_.labels[v]) ev.log_cut_ratio -= l1mq;
          if (label_b(u) == target) ev.log_cut_ratio += l1mq;
        }
      }
    }

    // Membership of touched categories in state B.
    std::vector<int> touched;
    for (std::size_t v = 0; v < n; ++v) {
      if (new_label[v] < 0 || new_label[v] == part_.labels[v]) continue;
      touched.push_back(part_.labels[v]);
      touched.push_back(new_label[v]);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    double delta_ll = 0.0;
    int k_b = k_a;
    for (int lbl : touched) {
      std::vector<int> members_b;
      if (lbl < k_a)
        for (int v : part_.members[lbl])
          if (label_b(v) == lbl) members_b.push_back(v);
      for (std::size_t v = 0; v < n; ++v)
        if (new_label[v] == lbl && part_.labels[v] != lbl) members_b.push_back(static_cast<int>(v));
      std::sort(members_b.begin(), members_b.end());
      const double ll_a = lbl < k_a ? loglik_[lbl] : 0.0;
      double ll_b = 0.0;
      if (members_b.empty()) {
        --k_b;
      } else {
        if (lbl == k_a) ++k_b;
        if (likelihood_on()) {
          const auto sum = member_sum(members_b);
          ll_b = category_log_likelihood(model_for(sum, members_b.size()), sum, members_b.size());
        }
      }
      delta_ll += ll_b - ll_a;
    }
    ev.k_b = k_b;
    ev.energy_b = energy_ + config_.beta * (k_b - k_a) - delta_ll;
    ev.log_label_ratio =
        static_cast<double>(moves.size()) * (std::log(static_cast<double>(k_a + 1)) - std::log(static_cast<double>(k_b + 1)));
    return ev;
  }

  // Commits a move (assumed already accepted) and compacts labels.
  void apply(const std::vector<ClusterMove>& moves) {
    const int k_a = part_.category_count();
    bool fresh = false;
    std::vector<int> touched;
    for (const auto& mv : moves)
      for (int v : mv.vertices) {
        const int from = part_.labels[v];
        if (from == mv.new_label) continue;
        touched.push_back(from);
        touched.push_back(mv.new_label);
        part_.labels[v] = mv.new_label;
        if (mv.new_label == k_a) fresh = true;
      }
    if (touched.empty()) return;
    if (fresh) {
      part_.members.emplace_back();
      sums_.emplace_back();
      models_.emplace_back();
      loglik_.push_back(0.0);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (int lbl : touched) part_.members[lbl].clear();
    for (std::size_t v = 0; v < part_.labels.size(); ++v) {
      const int l = part_.labels[v];
      if (std::binary_search(touched.begin(), touched.end(), l)) part_.members[l].push_back(static_cast<int>(v));
    }
    for (int lbl : touched)
      if (!part_.members[lbl].empty()) refresh_category(lbl);
    // Compact: move the last label into each empty slot, highest slot first.
    for (auto it = touched.rbegin(); it != touched.rend(); ++it) {
      const int lbl = *it;
      if (lbl >= part_.category_count() || !part_.members[lbl].empty()) continue;
      const int last = part_.category_count() - 1;
      if (lbl != last) {
        part_.members[lbl] = std::move(part_.members[last]);
        sums_[lbl] = std::move(sums_[last]);
        models_[lbl] = std::move(models_[last]);
        loglik_[lbl] = loglik_[last];
        for (int v : part_.members[lbl]) part_.labels[v] = lbl;
      }
      part_.members.pop_back();
      sums_.pop_back();
      models_.pop_back();
      loglik_.pop_back();
    }
    energy_ = total_energy();
  }

  // Draws the groups to relabel for one iteration (step 1-4 of a sweep).
  std::vector<ClusterMove> propose() {
    const ComponentSet cps = sample_cps(graph_, part_.labels, rng_);
    std::vector<std::vector<int>> groups;
    if (config_.mode == SamplerMode::kSwc) {
      const int pick = std::uniform_int_distribution<int>(0, static_cast<int>(cps.cps.size()) - 1)(rng_);
      groups.push_back(cps.cps[pick]);
    } else {
      const CpGraph cg = build_cp_graph(graph_, cps);
      const int n_select = std::uniform_int_distribution<int>(config_.min_select, config_.max_select)(rng_);
      groups = sample_combinatorial_clusters(cg, cps, rng_, n_select);
    }
    const int k = part_.category_count();
    std::vector<ClusterMove> moves;
    moves.reserve(groups.size());
    for (auto& g : groups) moves.push_back({std::move(g), std::uniform_int_distribution<int>(0, k)(rng_)});
    return moves;
  }

  // One full iteration; returns whether the proposal was accepted.
  bool step() {
    const auto moves = propose();
    const ProposalEvaluation ev = evaluate(moves);
    if (ev.identity) return true;
    const double u = detail::uniform01(rng_);
    if (u < ev.acceptance()) {
      apply(moves);
      return true;
    }
    return false;
  }

  RunResult run() {
    RunResult res;
    res.best = solution();
    if (config_.record_trace) res.trace.push_back({0, energy_, category_count(), true, energy_});
    int last_improvement = 0;
    for (int it = 1; it <= config_.max_iters; ++it) {
      const bool acc = step();
      res.accepted += acc ? 1 : 0;
      res.iterations = it;
      if (energy_ < res.best.energy) {
        res.best = solution();
        last_improvement = it;
      }
      if (config_.record_trace) res.trace.push_back({it, energy_, category_count(), acc, res.best.energy});
      if (config_.verify_every > 0 && it % config_.verify_every == 0) {
        const double fresh = recompute_energy();
        if (std::abs(fresh - energy_) > 1e-8 * std::max(1.0, std::abs(fresh)))
          throw std::logic_error("incremental energy drifted from recomputation at iteration " + std::to_string(it));
      }
      if (config_.log_every > 0 && it % config_.log_every == 0)
        std::fprintf(stderr, "[%s] iter %d  energy %.4f  K %d  best %.4f\n", to_string(config_.mode), it, energy_,
                     category_count(), res.best.energy);
      if (config_.plateau_iters > 0 && it - last_improvement >= config_.plateau_iters) break;
    }
    res.final_state = solution();
    return res;
  }

 private:
  bool likelihood_on() const { return config_.max_features > 0; }

  void init_default() {
    const std::size_t n = reps_.size();
    std::vector<int> raw(n);
    if (config_.init == InitMode::kSingletons) {
      std::iota(raw.begin(), raw.end(), 0);
    } else {
      UnionFind uf(n);
      for (const Edge& e : graph_.edges())
        if (e.q >= config_.warm_start_threshold) uf.unite(e.s, e.t);
      raw = uf.component_ids();
    }
    set_labels(raw);
  }

  std::vector<double> member_sum(std::span<const int> members) const {
    std::vector<double> sum(reps_.dim, 0.0);
    for (int v : members) {
      const auto r = reps_.row(static_cast<std::size_t>(v));
      for (std::size_t d = 0; d < reps_.dim; ++d) sum[d] += r[d];
    }
    return sum;
  }

  CategoryModel model_for(std::span<const double> sum, std::size_t count) const {
    std::vector<double> mean(sum.begin(), sum.end());
    for (double& v : mean) v /= static_cast<double>(count);
    return pursue_model(mean, background_, {config_.max_features, config_.rule, kExpectationClamp});
  }

  void refresh_category(int c) {
    if (!likelihood_on()) {
      loglik_[c] = 0.0;
      return;
    }
    sums_[c] = member_sum(part_.members[c]);
    models_[c] = model_for(sums_[c], part_.members[c].size());
    loglik_[c] = category_log_likelihood(models_[c], sums_[c], part_.members[c].size());
  }

  double total_energy() const {
    double e = config_.beta * part_.category_count();
    for (double ll : loglik_) e -= ll;
    return e;
  }

  const SimilarityGraph& graph_;
  const RepresentationSet& reps_;
  SamplerConfig config_;
  std::mt19937_64 rng_;
  BackgroundModel background_;
  Partition part_;
  std::vector<std::vector<double>> sums_;
  std::vector<CategoryModel> models_;
  std::vector<double> loglik_;
  double energy_ = 0.0;
};

// Runs one chain with config.seed and returns the best solution visited.
inline RunResult run(const SimilarityGraph& graph, const RepresentationSet& reps, const SamplerConfig& config) {
  Sampler s(graph, reps, config);
  return s.run();
}

}  // namespace scenecat
