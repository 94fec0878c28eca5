#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthetic.hpp"

namespace crossrank {

// Declarative pipeline configuration, loaded from a JSON file. Paths are
// resolved relative to the config file's directory.
struct PipelineConfig {
  std::filesystem::path data_root;
  std::vector<std::string> source_markets{"s1", "s2", "s3"};
  std::vector<std::string> target_markets{"t1", "t2"};
  // combo filter entries: a combo id ("s1-t1") or a bare market name, which
  // selects every combo containing that market; empty = all combos
  std::vector<std::string> combo_filter;
  std::vector<std::string> recommenders{"toppop",  "itemknn", "userknn",
                                        "p3alpha", "rp3beta", "puresvd",
                                        "slim",    "easer",   "als"};
  int budget_stage1 = 50;
  int budget_stage2 = 100;
  int budget_stage3 = 100;
  uint64_t seed = 42;
  std::vector<uint64_t> cv_seeds;  // defaults to 3 seeds derived from `seed`
  int cv_folds = 5;
  int jobs = 1;
  double unit_rating_value = 4.0;
  int slate_size = 100;
  std::filesystem::path output_dir;
  std::filesystem::path cache_dir;

  // boosted-ranker defaults; the stage-2/3 searches tune around these
  int64_t ranker_trees = 300;
  int64_t ranker_patience = 30;

  SynthConfig synth;

  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace crossrank
