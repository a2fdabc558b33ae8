// Apache License, Version 2.0, refer to LICENSE.txt
//
// Pipeline stages behind the command-line tool. Each stage reads its inputs
// from the paths in PipelineConfig, writes into paths.output_dir and leaves a
// "<stage>.config.json" snapshot of the resolved configuration there.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenecat/category_model.hpp"
#include "scenecat/codebook.hpp"
#include "scenecat/config.hpp"
#include "scenecat/csv.hpp"
#include "scenecat/evaluation.hpp"
#include "scenecat/graph.hpp"
#include "scenecat/image_io.hpp"
#include "scenecat/representation.hpp"
#include "scenecat/sampler.hpp"

namespace scenecat {

namespace fs = std::filesystem;

struct ImageCorpus {
  std::vector<GrayImage> images;
  std::vector<std::string> ids;  // file names
  std::size_t skipped = 0;
};

// Loads every decodable image; undecodable ones are skipped with a warning.
inline ImageCorpus load_corpus(const fs::path& dir) {
  ImageCorpus c;
  for (const auto& path : list_images(dir)) {
    try {
      c.images.push_back(load_gray(path));
      c.ids.push_back(path.filename().string());
    } catch (const InputError& e) {
      std::fprintf(stderr, "warning: skipping %s\n", e.what());
      ++c.skipped;
    }
  }
  if (c.images.empty()) throw InputError("no readable images in " + dir.string());
  return c;
}

namespace detail {

inline fs::path prepare_out(const PipelineConfig& cfg, const char* stage) {
  if (cfg.paths.output_dir.empty()) throw ConfigError("an output directory is required");
  const fs::path out(cfg.paths.output_dir);
  fs::create_directories(out);
  save_config(cfg, out / (std::string(stage) + ".config.json"));
  return out;
}

inline fs::path or_default(const std::string& configured, const fs::path& fallback) {
  return configured.empty() ? fallback : fs::path(configured);
}

}  // namespace detail

inline DictionaryBuildReport cmd_dict_build(const PipelineConfig& cfg) {
  if (cfg.paths.image_dir.empty()) throw ConfigError("dict-build needs an image directory");
  const fs::path out = detail::prepare_out(cfg, "dict-build");
  const ImageCorpus corpus = load_corpus(cfg.paths.image_dir);
  DictionaryBuildReport report;
  const Dictionary dict = build_dictionary(corpus.images, cfg.dictionary_params(), &report);
  const fs::path path = detail::or_default(cfg.paths.dictionary, out / "dictionary.bin");
  save_dictionary(dict, path);
  std::printf("images %zu (skipped %zu)\nITW pool %zu  inertia %.6f\nHTW pool %zu  inertia %.6f\nwrote %s\n",
              corpus.images.size(), corpus.skipped, report.itw_pool, report.itw_inertia, report.htw_pool,
              report.htw_inertia, path.string().c_str());
  return report;
}

inline RepresentationSet cmd_represent(const PipelineConfig& cfg) {
  if (cfg.paths.image_dir.empty()) throw ConfigError("represent needs an image directory");
  const fs::path out = detail::prepare_out(cfg, "represent");
  const Dictionary dict = load_dictionary(detail::or_default(cfg.paths.dictionary, out / "dictionary.bin"));
  const ImageCorpus corpus = load_corpus(cfg.paths.image_dir);
  const RepresentationSet reps = encode_all(corpus.images, corpus.ids, dict, cfg.encode_config());
  const fs::path path = detail::or_default(cfg.paths.representations, out / "representations.bin");
  save_representations(reps, path);
  std::printf("encoded %zu images, %zu components each\nwrote %s\n", reps.size(), reps.dim, path.string().c_str());
  return reps;
}

struct CategorizeOutput {
  std::vector<RunResult> runs;
  std::vector<fs::path> solution_files;
};

// One chain per seed in [seed, seed + runs). The first run's outputs go to
// the output directory itself, further runs to run_<seed>/ subdirectories.
inline CategorizeOutput cmd_categorize(const PipelineConfig& cfg) {
  const fs::path out = detail::prepare_out(cfg, "categorize");
  const RepresentationSet reps =
      load_representations(detail::or_default(cfg.paths.representations, out / "representations.bin"));
  if (reps.dim % kPyramidBlocks != 0) throw InputError("representation length is not a multiple of 9");
  const std::size_t words = reps.dim / kPyramidBlocks;
  std::size_t n_itw = words / 2;
  if (!cfg.paths.dictionary.empty() && fs::exists(cfg.paths.dictionary))
    n_itw = load_dictionary(cfg.paths.dictionary).n_itw;
  if (cfg.sampler.runs < 1) throw ConfigError("sampler.runs must be >= 1");

  const SimilarityGraph graph = build_graph(reps, cfg.graph);
  CategorizeOutput result;
  for (int r = 0; r < cfg.sampler.runs; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    const SamplerConfig sc = cfg.sampler_config(seed);
    RunResult run_result = run(graph, reps, sc);
    const fs::path dir = r == 0 ? out : out / ("run_" + std::to_string(seed));
    fs::create_directories(dir);
    csv::write_labels(dir / "solution.csv", reps.ids, run_result.best.partition.labels);
    csv::write_trace(dir / "trace.csv", run_result.trace);
    csv::write_selected_words(dir / "selected_words.csv", run_result.best.models, n_itw, words);
    std::printf("seed %llu: K = %d, best energy %.6f, accepted %d / %d\n", static_cast<unsigned long long>(seed),
                run_result.best.partition.category_count(), run_result.best.energy, run_result.accepted,
                run_result.iterations);
    result.solution_files.push_back(dir / "solution.csv");
    result.runs.push_back(std::move(run_result));
  }
  return result;
}

// Aligns a solution with ground truth by image id.
inline LabeledOutcome align_outcome(const std::vector<std::pair<std::string, int>>& truth,
                                    const std::vector<std::pair<std::string, int>>& solution) {
  std::map<std::string, int> by_id(truth.begin(), truth.end());
  LabeledOutcome o;
  for (const auto& [id, label] : solution) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("image '" + id + "' has no ground-truth label");
    o.truth.push_back(it->second);
    o.predicted.push_back(label);
  }
  return o;
}

// Purity, conditional entropy and inferred K; mean and standard deviation
// across solution files when there are several.
inline std::vector<std::pair<std::string, double>> cmd_evaluate(const PipelineConfig& cfg,
                                                                const std::vector<fs::path>& solutions) {
  if (cfg.paths.ground_truth.empty()) throw ConfigError("evaluate needs a ground-truth file");
  if (solutions.empty()) throw ConfigError("evaluate needs at least one solution file");
  const fs::path out = detail::prepare_out(cfg, "evaluate");
  const auto truth = csv::read_labels(cfg.paths.ground_truth);
  std::vector<double> pur, ent, ks;
  for (const auto& s : solutions) {
    const LabeledOutcome o = align_outcome(truth, csv::read_labels(s));
    pur.push_back(purity(o));
    ent.push_back(conditional_entropy(o));
    ks.push_back(distinct_count(o.predicted));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto stddev = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  std::vector<std::pair<std::string, double>> rows = {
      {"purity", mean(pur)},        {"conditional_entropy", mean(ent)},    {"inferred_k", mean(ks)},
      {"purity_std", stddev(pur)},  {"conditional_entropy_std", stddev(ent)}, {"inferred_k_std", stddev(ks)},
      {"runs", static_cast<double>(solutions.size())}};
  csv::write_metrics(out / "metrics.csv", rows);
  for (const auto& [k, v] : rows) std::printf("%s %.6f\n", k.c_str(), v);
  return rows;
}

// Paired swc / cswc chains on the same graph for each seed.
inline void cmd_bench_convergence(const PipelineConfig& cfg) {
  const fs::path out = detail::prepare_out(cfg, "bench-convergence");
  const RepresentationSet reps =
      load_representations(detail::or_default(cfg.paths.representations, out / "representations.bin"));
  const SimilarityGraph graph = build_graph(reps, cfg.graph);
  for (int r = 0; r < std::max(1, cfg.sampler.runs); ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    for (const char* mode : {"swc", "cswc"}) {
      PipelineConfig c = cfg;
      c.sampler.mode = mode;
      const RunResult res = run(graph, reps, c.sampler_config(seed));
      const fs::path path = out / ("trace_" + std::string(mode) + "_seed" + std::to_string(seed) + ".csv");
      csv::write_trace(path, res.trace);
      std::printf("%s seed %llu: best energy %.6f, K = %d\n", mode, static_cast<unsigned long long>(seed),
                  res.best.energy, res.best.partition.category_count());
    }
  }
}

struct SynthOptions {
  int clusters = 4;
  int per_cluster = 25;
  std::size_t dim = 360;
  std::size_t separation = 40;
  double noise = 0.02;
  int images_per_kind = 0;  // > 0: also write texture PNGs
  int image_size = 128;
};

// Writes a synthetic representation fixture (representations.bin + truth.csv)
// and optionally a texture image corpus under images/.
inline void cmd_synth(const PipelineConfig& cfg, const SynthOptions& opt) {
  const fs::path out = detail::prepare_out(cfg, "synth");
  const SyntheticSet s = synth_representations(opt.clusters, opt.per_cluster, opt.dim, opt.separation, opt.noise, cfg.seed);
  save_representations(s.reps, out / "representations.bin");
  csv::write_labels(out / "truth.csv", s.reps.ids, s.truth);
  std::printf("wrote %zu synthetic representations to %s\n", s.reps.size(), out.string().c_str());
  if (opt.images_per_kind > 0) {
    const fs::path dir = out / "images";
    fs::create_directories(dir);
    std::vector<std::string> ids;
    std::vector<int> labels;
    const TextureKind kinds[] = {TextureKind::kStripes, TextureKind::kChecker, TextureKind::kNoise, TextureKind::kFlat};
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < opt.images_per_kind; ++i) {
        const std::string name = "tex" + std::to_string(k) + "_" + std::to_string(i) + ".png";
        save_gray_png(synth_texture(kinds[k], opt.image_size, opt.image_size, mix_seed(cfg.seed, 100 * k + i)),
                      dir / name);
        ids.push_back(name);
        labels.push_back(k);
      }
    csv::write_labels(out / "images_truth.csv", ids, labels);
    std::printf("wrote %zu texture images to %s\n", ids.size(), dir.string().c_str());
  }
}

}  // namespace scenecat
