// crossrank command-line driver. Talks to the pipeline exclusively through
// the public C interface; exit code equals the crossrank_status value.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crossrank.h"

namespace {

struct PipelineCloser {
  void operator()(crossrank_pipeline* p) const { crossrank_pipeline_close(p); }
};
using PipelineHandle = std::unique_ptr<crossrank_pipeline, PipelineCloser>;

struct Options {
  std::string config_path = "crossrank.json";
  int jobs = 0;
  bool has_seed = false;
  uint64_t seed = 0;
  std::string combo_filter;
};

int fail_with(crossrank_status status, const crossrank_pipeline* pipeline,
              const char* what) {
  std::fprintf(stderr, "crossrank: %s failed (%s): %s\n", what,
               crossrank_status_name(status),
               pipeline ? crossrank_pipeline_last_error(pipeline) : "");
  return static_cast<int>(status);
}

int run_steps(const Options& opts,
              const std::vector<std::string>& steps) {
  crossrank_pipeline* raw = nullptr;
  const crossrank_status open_status =
      crossrank_pipeline_open(opts.config_path.c_str(), &raw);
  if (open_status != CROSSRANK_OK) {
    std::fprintf(stderr, "crossrank: cannot load config %s (%s)\n",
                 opts.config_path.c_str(), crossrank_status_name(open_status));
    return static_cast<int>(open_status);
  }
  PipelineHandle pipeline(raw);

  if (opts.jobs > 0) {
    const auto status = crossrank_pipeline_set_jobs(pipeline.get(), opts.jobs);
    if (status != CROSSRANK_OK)
      return fail_with(status, pipeline.get(), "set-jobs");
  }
  if (opts.has_seed) {
    const auto status = crossrank_pipeline_set_seed(pipeline.get(), opts.seed);
    if (status != CROSSRANK_OK)
      return fail_with(status, pipeline.get(), "set-seed");
  }
  if (!opts.combo_filter.empty()) {
    const auto status = crossrank_pipeline_set_combo_filter(
        pipeline.get(), opts.combo_filter.c_str());
    if (status != CROSSRANK_OK)
      return fail_with(status, pipeline.get(), "set-combo-filter");
  }
  if (const char* cache_dir = std::getenv("CROSSRANK_CACHE_DIR")) {
    const auto status =
        crossrank_pipeline_set_cache_dir(pipeline.get(), cache_dir);
    if (status != CROSSRANK_OK)
      return fail_with(status, pipeline.get(), "set-cache-dir");
  }

  for (const auto& step : steps) {
    crossrank_status status = CROSSRANK_OK;
    if (step == "synth") {
      status = crossrank_pipeline_synth(pipeline.get());
    } else if (step == "prepare") {
      status = crossrank_pipeline_prepare(pipeline.get());
    } else if (step == "stage1") {
      status = crossrank_pipeline_stage1(pipeline.get());
    } else if (step == "stage2") {
      status = crossrank_pipeline_stage2(pipeline.get());
    } else if (step == "stage3") {
      status = crossrank_pipeline_stage3(pipeline.get());
    } else if (step == "submit") {
      status = crossrank_pipeline_submit(pipeline.get());
    } else if (step == "evaluate") {
      char* report = nullptr;
      status = crossrank_pipeline_evaluate(pipeline.get(), &report);
      if (status == CROSSRANK_OK && report) {
        std::fputs(report, stdout);
        crossrank_string_free(report);
      }
    } else {
      std::fprintf(stderr, "crossrank: unknown step %s\n", step.c_str());
      return static_cast<int>(CROSSRANK_ERR_INVALID_ARGUMENT);
    }
    if (status != CROSSRANK_OK)
      return fail_with(status, pipeline.get(), step.c_str());
    std::fprintf(stderr, "crossrank: %s done\n", step.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossrank: multi-stage cross-market ranking pipeline"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--config", opts.config_path, "pipeline config JSON")
      ->capture_default_str();
  app.add_option("--jobs", opts.jobs, "worker threads (default: config)");
  auto* seed_opt =
      app.add_option("--seed-override", opts.seed, "override the master seed");
  app.add_option("--combo-filter", opts.combo_filter,
                 "comma-separated terms: a combo id (s1-t1), a market name "
                 "(t1 = every combo containing t1), or id:<combo>");

  std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate a synthetic multi-market world into data_root"},
      {"prepare", "fuse market combinations into cached datasets"},
      {"stage1", "tune and score the first-stage recommenders"},
      {"stage2", "dataset-level boosted and linear ensembles"},
      {"stage3", "last-level stacking ensemble per target market"},
      {"evaluate", "print the per-dataset validation report"},
      {"submit", "write submission files for the target markets"},
      {"run", "prepare + stage1 + stage2 + stage3 + submit"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);
  opts.has_seed = seed_opt->count() > 0;

  const std::string command = app.get_subcommands().front()->get_name();
  std::vector<std::string> steps;
  if (command == "run")
    steps = {"prepare", "stage1", "stage2", "stage3", "submit"};
  else
    steps = {command};
  return run_steps(opts, steps);
}
