// Apache License, Version 2.0, refer to LICENSE.txt
//
// scenecat: unsupervised scene categorization pipeline.
//
//   scenecat dict-build        --images DIR --out DIR
//   scenecat represent         --images DIR --dictionary FILE --out DIR
//   scenecat categorize        --representations FILE --out DIR
//   scenecat evaluate          --truth FILE --solutions FILE... --out DIR
//   scenecat bench-convergence --representations FILE --out DIR
//   scenecat synth             --out DIR
//
// Every subcommand accepts --config FILE (JSON) and --seed N; flags override
// values from the config file.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenecat/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "random seed (overrides config)");
  cmd->add_option("--out", f.out, "output directory")->required();
}

scenecat::PipelineConfig resolve(const CommonFlags& f) {
  scenecat::PipelineConfig cfg = f.config.empty() ? scenecat::PipelineConfig{} : scenecat::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  cfg.paths.output_dir = f.out;
  return cfg;
}

template <typename T>
void override_if(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised scene categorization by compositional Swendsen-Wang cuts"};
  app.require_subcommand(1);

  CommonFlags dict_f, rep_f, cat_f, eval_f, bench_f, synth_f;
  std::optional<std::string> images, dictionary, representations, truth, mode;
  std::optional<std::size_t> n_itw, n_htw;
  std::optional<int> iters, runs;
  std::optional<double> beta;
  std::vector<std::string> solutions;
  scenecat::SynthOptions synth_opt;

  auto* dict_cmd = app.add_subcommand("dict-build", "build the ITW/HTW visual-word dictionary");
  add_common(dict_cmd, dict_f);
  dict_cmd->add_option("--images", images, "directory of PNG/JPEG images");
  dict_cmd->add_option("--n-itw", n_itw, "number of HOG words");
  dict_cmd->add_option("--n-htw", n_htw, "number of CS-LBP words");
  dict_cmd->add_option("--dictionary", dictionary, "dictionary output file (default OUT/dictionary.bin)");

  auto* rep_cmd = app.add_subcommand("represent", "encode images as pyramid word responses");
  add_common(rep_cmd, rep_f);
  rep_cmd->add_option("--images", images, "directory of PNG/JPEG images");
  rep_cmd->add_option("--dictionary", dictionary, "dictionary file");
  rep_cmd->add_option("--representations", representations, "matrix output file (default OUT/representations.bin)");

  auto* cat_cmd = app.add_subcommand("categorize", "infer categories by graph-partition sampling");
  add_common(cat_cmd, cat_f);
  cat_cmd->add_option("--representations", representations, "representation matrix file");
  cat_cmd->add_option("--dictionary", dictionary, "dictionary file (for word kinds in the report)");
  cat_cmd->add_option("--mode", mode, "swc or cswc")->check(CLI::IsMember({"swc", "cswc"}));
  cat_cmd->add_option("--iters", iters, "sampler iterations");
  cat_cmd->add_option("--runs", runs, "number of chains (seeds seed..seed+runs-1)");
  cat_cmd->add_option("--beta", beta, "category-count penalty");

  auto* eval_cmd = app.add_subcommand("evaluate", "score solutions against ground truth");
  add_common(eval_cmd, eval_f);
  eval_cmd->add_option("--truth", truth, "ground-truth CSV image_id,label");
  eval_cmd->add_option("--solutions", solutions, "solution CSV files")->required();

  auto* bench_cmd = app.add_subcommand("bench-convergence", "paired swc/cswc energy traces");
  add_common(bench_cmd, bench_f);
  bench_cmd->add_option("--representations", representations, "representation matrix file");
  bench_cmd->add_option("--iters", iters, "sampler iterations");
  bench_cmd->add_option("--runs", runs, "number of seeds");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic fixture");
  add_common(synth_cmd, synth_f);
  synth_cmd->add_option("--clusters", synth_opt.clusters, "number of clusters");
  synth_cmd->add_option("--per-cluster", synth_opt.per_cluster, "members per cluster");
  synth_cmd->add_option("--dim", synth_opt.dim, "representation length");
  synth_cmd->add_option("--separation", synth_opt.separation, "support width per cluster");
  synth_cmd->add_option("--noise", synth_opt.noise, "noise standard deviation");
  synth_cmd->add_option("--images-per-kind", synth_opt.images_per_kind, "also write texture images");
  synth_cmd->add_option("--image-size", synth_opt.image_size, "texture image side in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dict_cmd->parsed()) {
      auto cfg = resolve(dict_f);
      override_if(images, cfg.paths.image_dir);
      override_if(dictionary, cfg.paths.dictionary);
      override_if(n_itw, cfg.dictionary.n_itw);
      override_if(n_htw, cfg.dictionary.n_htw);
      scenecat::cmd_dict_build(cfg);
    } else if (rep_cmd->parsed()) {
      auto cfg = resolve(rep_f);
      override_if(images, cfg.paths.image_dir);
      override_if(dictionary, cfg.paths.dictionary);
      override_if(representations, cfg.paths.representations);
      scenecat::cmd_represent(cfg);
    } else if (cat_cmd->parsed()) {
      auto cfg = resolve(cat_f);
      override_if(representations, cfg.paths.representations);
      override_if(dictionary, cfg.paths.dictionary);
      override_if(mode, cfg.sampler.mode);
      override_if(iters, cfg.sampler.max_iters);
      override_if(runs, cfg.sampler.runs);
      override_if(beta, cfg.sampler.beta);
      scenecat::cmd_categorize(cfg);
    } else if (eval_cmd->parsed()) {
      auto cfg = resolve(eval_f);
      override_if(truth, cfg.paths.ground_truth);
      std::vector<std::filesystem::path> paths(solutions.begin(), solutions.end());
      scenecat::cmd_evaluate(cfg, paths);
    } else if (bench_cmd->parsed()) {
      auto cfg = resolve(bench_f);
      override_if(representations, cfg.paths.representations);
      override_if(iters, cfg.sampler.max_iters);
      override_if(runs, cfg.sampler.runs);
      scenecat::cmd_bench_convergence(cfg);
    } else if (synth_cmd->parsed()) {
      scenecat::cmd_synth(resolve(synth_f), synth_opt);
    }
  } catch (const scenecat::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
