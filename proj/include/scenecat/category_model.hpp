// Apache License, Version 2.0, refer to LICENSE.txt
//
// Per-category generative model learned by greedy feature pursuit. Each
// candidate feature is one pyramid component (block, word) of the response
// vector. Features are treated as independent Bernoulli-tilted responses, so
// both the moment-matching weight and the information gain of a feature have
// closed forms:
//
//   lambda = log[e_f (1 - e_0) / ((1 - e_f) e_0)]
//   z      = e^lambda e_0 + 1 - e_0 = (1 - e_0) / (1 - e_f)
//   gain   = lambda e_f - log z  = KL(Bernoulli(e_f) || Bernoulli(e_0))
//
// and an image scores log phi(I) = sum_t lambda_t r_t(I) - log z_t, with the
// image-independent base density dropped.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "scenecat/error.hpp"
#include "scenecat/representation.hpp"

namespace scenecat {

inline constexpr double kExpectationClamp = 0.01;

inline double clamp_expectation(double e, double eps = kExpectationClamp) { return std::clamp(e, eps, 1.0 - eps); }

// Dataset-wide mean response per feature, clamped into (0, 1).
struct BackgroundModel {
  std::vector<double> e0;
  std::vector<double> logit_e0;     // log(e0 / (1 - e0))
  std::vector<double> log1m_e0;     // log(1 - e0)

  std::size_t size() const { return e0.size(); }

  static BackgroundModel from_expectations(std::vector<double> e) {
    BackgroundModel b;
    b.logit_e0.resize(e.size());
    b.log1m_e0.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      b.logit_e0[i] = std::log(e[i]) - std::log1p(-e[i]);
      b.log1m_e0[i] = std::log1p(-e[i]);
    }
    b.e0 = std::move(e);
    return b;
  }
};

inline BackgroundModel background_expectations(const RepresentationSet& reps, double eps = kExpectationClamp) {
  if (reps.size() == 0) throw ConfigError("background_expectations: no images");
  std::vector<double> sum(reps.dim, 0.0);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto r = reps.row(i);
    for (std::size_t d = 0; d < reps.dim; ++d) sum[d] += r[d];
  }
  for (double& v : sum) v = clamp_expectation(v / static_cast<double>(reps.size()), eps);
  return BackgroundModel::from_expectations(std::move(sum));
}

// Unclamped mean response of the member images.
inline std::vector<double> mean_responses(const RepresentationSet& reps, std::span<const int> members) {
  if (members.empty()) throw ConfigError("category has no members");
  std::vector<double> sum(reps.dim, 0.0);
  for (int v : members) {
    const auto r = reps.row(static_cast<std::size_t>(v));
    for (std::size_t d = 0; d < reps.dim; ++d) sum[d] += r[d];
  }
  for (double& v : sum) v /= static_cast<double>(members.size());
  return sum;
}

inline std::vector<double> category_expectations(const RepresentationSet& reps, std::span<const int> members,
                                                 double eps = kExpectationClamp) {
  auto e = mean_responses(reps, members);
  for (double& v : e) v = clamp_expectation(v, eps);
  return e;
}

struct TiltSolution {
  double lambda = 0.0;
  double z = 1.0;
  double log_z = 0.0;
};

// Closed-form moment matching for one feature, evaluated in log space.
// Requires e_f, e_0 in (0, 1).
inline TiltSolution min_kl_solve(double e_f, double e_0) {
  const double log1m_f = std::log1p(-e_f);
  const double log1m_0 = std::log1p(-e_0);
  const double lambda = (std::log(e_f) - log1m_f) - (std::log(e_0) - log1m_0);
  const double log_z = log1m_0 - log1m_f;
  return {lambda, std::exp(log_z), log_z};
}

// KL gain of tilting feature expectation e_0 to e_f.
inline double information_gain(double e_f, double e_0) {
  const TiltSolution s = min_kl_solve(e_f, e_0);
  return s.lambda * e_f - s.log_z;
}

enum class SelectionRule {
  kResponseGap,       // argmax e_f - e_0
  kInformationGain,   // argmax lambda e_f - log z among features with e_f > e_0
};

// Next feature to add, or nullopt when no unselected feature has e_f > e_0.
// Ties go to the lowest feature index.
inline std::optional<std::size_t> max_kl_select(std::span<const double> e_f, std::span<const double> e_0,
                                                std::span<const bool> already_selected,
                                                SelectionRule rule = SelectionRule::kResponseGap) {
  if (e_f.size() != e_0.size()) throw ConfigError("max_kl_select: expectation vectors differ in length");
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < e_f.size(); ++i) {
    if (!already_selected.empty() && already_selected[i]) continue;
    const double gap = e_f[i] - e_0[i];
    if (!(gap > 0.0)) continue;
    const double score = rule == SelectionRule::kResponseGap ? gap : information_gain(e_f[i], e_0[i]);
    if (!best || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

struct FeatureRef {
  int block = 0;
  int word = 0;

  static FeatureRef of(std::size_t feature, std::size_t words) {
    return {static_cast<int>(feature / words), static_cast<int>(feature % words)};
  }
};

struct SelectedFeature {
  std::size_t feature = 0;  // index into the response vector
  double lambda = 0.0;
  double z = 1.0;
  double log_z = 0.0;
  double gain = 0.0;
};

struct CategoryModel {
  std::vector<SelectedFeature> selected;

  bool empty() const { return selected.empty(); }
  double total_gain() const {
    double g = 0.0;
    for (const auto& f : selected) g += f.gain;
    return g;
  }
};

struct PursuitParams {
  int max_features = 40;
  SelectionRule rule = SelectionRule::kInformationGain;
  double clamp = kExpectationClamp;
};

// Greedy pursuit. With independent features every score is fixed up front, so
// iterating max_kl_select T times equals taking the T best-scoring admissible
// features; that is what this does in one pass. `mean` is the unclamped
// member mean; it is clamped before solving.
inline CategoryModel pursue_model(std::span<const double> mean, const BackgroundModel& bg,
                                  const PursuitParams& params = {}) {
  if (params.max_features < 1) throw ConfigError("pursue_model: max_features must be >= 1");
  if (mean.size() != bg.size()) throw ConfigError("pursue_model: expectation vectors differ in length");
  struct Candidate {
    std::size_t feature;
    double score;
    double gain;
    double lambda;
    double log_z;
  };
  std::vector<Candidate> cand;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double ef = clamp_expectation(mean[i], params.clamp);
    if (!(ef > bg.e0[i])) continue;
    const double log1m_f = std::log1p(-ef);
    const double lambda = (std::log(ef) - log1m_f) - bg.logit_e0[i];
    const double log_z = bg.log1m_e0[i] - log1m_f;
    const double gain = lambda * ef - log_z;
    const double score = params.rule == SelectionRule::kResponseGap ? ef - bg.e0[i] : gain;
    cand.push_back({i, score, gain, lambda, log_z});
  }
  const std::size_t t = std::min(cand.size(), static_cast<std::size_t>(params.max_features));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(t), cand.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.score != b.score ? a.score > b.score : a.feature < b.feature;
                    });
  CategoryModel m;
  m.selected.reserve(t);
  for (std::size_t j = 0; j < t; ++j) {
    const Candidate& c = cand[j];
    m.selected.push_back({c.feature, c.lambda, std::exp(c.log_z), c.log_z, c.gain});
  }
  return m;
}

inline CategoryModel pursue_model(const RepresentationSet& reps, std::span<const int> members,
                                  const BackgroundModel& bg, const PursuitParams& params = {}) {
  return pursue_model(mean_responses(reps, members), bg, params);
}

inline double log_phi(const CategoryModel& model, std::span<const float> rep) {
  double s = 0.0;
  for (const auto& f : model.selected) s += f.lambda * static_cast<double>(rep[f.feature]) - f.log_z;
  return s;
}

// Sum of log_phi over members, from the members' response sums.
inline double category_log_likelihood(const CategoryModel& model, std::span<const double> response_sum,
                                      std::size_t members) {
  double s = 0.0;
  for (const auto& f : model.selected)
    s += f.lambda * response_sum[f.feature] - static_cast<double>(members) * f.log_z;
  return s;
}

}  // namespace scenecat
