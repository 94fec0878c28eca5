#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "market_io.hpp"

namespace crossrank {

// Seeded multi-market world with shared item factors and market-specific
// user populations. Every user holds back one validation and one test
// positive; slate negatives are items the user never rated anywhere.
struct SynthConfig {
  int n_source_markets = 3;
  int n_target_markets = 2;
  int users_per_market = 200;
  int catalog_size = 400;
  int latent_dim = 8;
  double noise = 0.2;
  int min_ratings = 4;
  int max_ratings = 16;
  int slate_size = 100;
  uint64_t seed = 1;

  void validate() const;
};

struct SynthWorld {
  std::map<std::string, MarketBundle> bundles;  // keyed by market id
  // hidden test positives per market (not part of the bundle)
  std::map<std::string, std::unordered_map<std::string, std::string>> test_qrels;
  // ground-truth factors, exposed for oracle scoring and debugging
  std::map<std::string, std::vector<std::pair<std::string, std::vector<double>>>>
      user_factors;
  std::vector<std::pair<std::string, std::vector<double>>> item_factors;
};

SynthWorld generate_synthetic(const SynthConfig& cfg);

// Emits one directory per market in the exact market file formats, plus
// test_qrel.tsv (hidden positives) and the generator's ground-truth factor
// tables (factors_users.tsv, factors_items.tsv).
void write_synthetic_world(const SynthConfig& cfg,
                           const std::filesystem::path& out_dir);

}  // namespace crossrank
