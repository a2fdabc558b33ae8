// Apache License, Version 2.0, refer to LICENSE.txt
//
// Pipeline configuration, read from and written to JSON. Missing keys keep
// their defaults; the resolved configuration is written next to every
// stage's outputs so the stage can be re-run exactly.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenecat/codebook.hpp"
#include "scenecat/error.hpp"
#include "scenecat/graph.hpp"
#include "scenecat/representation.hpp"
#include "scenecat/sampler.hpp"

namespace scenecat {

struct PipelineConfig {
  struct Paths {
    std::string image_dir;
    std::string dictionary;
    std::string representations;
    std::string output_dir;
    std::string ground_truth;
  } paths;

  struct DictionarySection {
    std::size_t n_itw = 500;
    std::size_t n_htw = 500;
    std::size_t per_image = 200;
    std::size_t pool_cap = 200000;
    int kmeans_iters = 100;
    double kmeans_tol = 1e-6;
  } dictionary;

  struct RepresentationSection {
    std::vector<int> patch_sides{16, 24, 32};
    double stride_fraction = 0.5;
    double saturation = 8.0;
    double cslbp_threshold = 1.0;
    double cslbp_radius = 2.0;
  } representation;

  GraphParams graph;

  struct SamplerSection {
    double beta = 300.0;
    int max_features = 40;
    int max_iters = 5000;
    std::string mode = "cswc";
    int min_select = 1;
    int max_select = 3;
    std::string init = "singletons";
    double warm_start_threshold = 0.5;
    int plateau_iters = 0;
    int log_every = 100;
    std::string selection = "gain";
    int runs = 1;
  } sampler;

  std::uint64_t seed = 0;

  PatchConfig patch_config() const {
    PatchConfig p;
    p.sides = representation.patch_sides;
    p.stride_fraction = representation.stride_fraction;
    p.cslbp = {representation.cslbp_threshold, representation.cslbp_radius};
    return p;
  }

  DictionaryParams dictionary_params() const {
    DictionaryParams d;
    d.n_itw = dictionary.n_itw;
    d.n_htw = dictionary.n_htw;
    d.per_image = dictionary.per_image;
    d.pool_cap = dictionary.pool_cap;
    d.seed = seed;
    d.kmeans_iters = dictionary.kmeans_iters;
    d.kmeans_tol = dictionary.kmeans_tol;
    d.patches = patch_config();
    return d;
  }

  EncodeConfig encode_config() const { return {patch_config(), representation.saturation}; }

  SamplerConfig sampler_config(std::uint64_t chain_seed) const {
    SamplerConfig s;
    s.max_iters = sampler.max_iters;
    s.beta = sampler.beta;
    s.max_features = sampler.max_features;
    if (sampler.mode == "swc")
      s.mode = SamplerMode::kSwc;
    else if (sampler.mode == "cswc")
      s.mode = SamplerMode::kCswc;
    else
      throw ConfigError("sampler.mode must be 'swc' or 'cswc', got '" + sampler.mode + "'");
    if (sampler.init == "singletons")
      s.init = InitMode::kSingletons;
    else if (sampler.init == "components")
      s.init = InitMode::kComponents;
    else
      throw ConfigError("sampler.init must be 'singletons' or 'components', got '" + sampler.init + "'");
    if (sampler.selection == "gain")
      s.rule = SelectionRule::kInformationGain;
    else if (sampler.selection == "gap")
      s.rule = SelectionRule::kResponseGap;
    else
      throw ConfigError("sampler.selection must be 'gain' or 'gap', got '" + sampler.selection + "'");
    s.min_select = sampler.min_select;
    s.max_select = sampler.max_select;
    s.warm_start_threshold = sampler.warm_start_threshold;
    s.plateau_iters = sampler.plateau_iters;
    s.log_every = sampler.log_every;
    s.seed = chain_seed;
    s.validate();
    return s;
  }
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["paths"] = {{"image_dir", c.paths.image_dir},
                {"dictionary", c.paths.dictionary},
                {"representations", c.paths.representations},
                {"output_dir", c.paths.output_dir},
                {"ground_truth", c.paths.ground_truth}};
  j["dictionary"] = {{"n_itw", c.dictionary.n_itw},         {"n_htw", c.dictionary.n_htw},
                     {"per_image", c.dictionary.per_image}, {"pool_cap", c.dictionary.pool_cap},
                     {"kmeans_iters", c.dictionary.kmeans_iters}, {"kmeans_tol", c.dictionary.kmeans_tol}};
  j["representation"] = {{"patch_sides", c.representation.patch_sides},
                         {"stride_fraction", c.representation.stride_fraction},
                         {"saturation", c.representation.saturation},
                         {"cslbp_threshold", c.representation.cslbp_threshold},
                         {"cslbp_radius", c.representation.cslbp_radius}};
  j["graph"] = {{"tau", c.graph.tau}, {"max_neighbors", c.graph.max_neighbors}, {"smoothing", c.graph.smoothing}};
  j["sampler"] = {{"beta", c.sampler.beta},
                  {"max_features", c.sampler.max_features},
                  {"max_iters", c.sampler.max_iters},
                  {"mode", c.sampler.mode},
                  {"min_select", c.sampler.min_select},
                  {"max_select", c.sampler.max_select},
                  {"init", c.sampler.init},
                  {"warm_start_threshold", c.sampler.warm_start_threshold},
                  {"plateau_iters", c.sampler.plateau_iters},
                  {"log_every", c.sampler.log_every},
                  {"selection", c.sampler.selection},
                  {"runs", c.sampler.runs}};
  j["seed"] = c.seed;
  return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  PipelineConfig c;
  const auto& p = detail::section(j, "paths");
  detail::read_key(p, "image_dir", c.paths.image_dir);
  detail::read_key(p, "dictionary", c.paths.dictionary);
  detail::read_key(p, "representations", c.paths.representations);
  detail::read_key(p, "output_dir", c.paths.output_dir);
  detail::read_key(p, "ground_truth", c.paths.ground_truth);
  const auto& d = detail::section(j, "dictionary");
  detail::read_key(d, "n_itw", c.dictionary.n_itw);
  detail::read_key(d, "n_htw", c.dictionary.n_htw);
  detail::read_key(d, "per_image", c.dictionary.per_image);
  detail::read_key(d, "pool_cap", c.dictionary.pool_cap);
  detail::read_key(d, "kmeans_iters", c.dictionary.kmeans_iters);
  detail::read_key(d, "kmeans_tol", c.dictionary.kmeans_tol);
  const auto& r = detail::section(j, "representation");
  detail::read_key(r, "patch_sides", c.representation.patch_sides);
  detail::read_key(r, "stride_fraction", c.representation.stride_fraction);
  detail::read_key(r, "saturation", c.representation.saturation);
  detail::read_key(r, "cslbp_threshold", c.representation.cslbp_threshold);
  detail::read_key(r, "cslbp_radius", c.representation.cslbp_radius);
  const auto& g = detail::section(j, "graph");
  detail::read_key(g, "tau", c.graph.tau);
  detail::read_key(g, "max_neighbors", c.graph.max_neighbors);
  detail::read_key(g, "smoothing", c.graph.smoothing);
  const auto& s = detail::section(j, "sampler");
  detail::read_key(s, "beta", c.sampler.beta);
  detail::read_key(s, "max_features", c.sampler.max_features);
  detail::read_key(s, "max_iters", c.sampler.max_iters);
  detail::read_key(s, "mode", c.sampler.mode);
  detail::read_key(s, "min_select", c.sampler.min_select);
  detail::read_key(s, "max_select", c.sampler.max_select);
  detail::read_key(s, "init", c.sampler.init);
  detail::read_key(s, "warm_start_threshold", c.sampler.warm_start_threshold);
  detail::read_key(s, "plateau_iters", c.sampler.plateau_iters);
  detail::read_key(s, "log_every", c.sampler.log_every);
  detail::read_key(s, "selection", c.sampler.selection);
  detail::read_key(s, "runs", c.sampler.runs);
  detail::read_key(j, "seed", c.seed);
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

inline void save_config(const PipelineConfig& c, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << to_json(c).dump(2) << '\n';
}

}  // namespace scenecat
