#include "config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

void PipelineConfig::validate() const {
  if (target_markets.empty()) fail(Status::Config, "no target markets");
  if (recommenders.empty()) fail(Status::Config, "no recommenders configured");
  if (budget_stage1 < 1 || budget_stage2 < 1 || budget_stage3 < 1)
    fail(Status::Config, "budgets must be >= 1");
  if (cv_folds < 2) fail(Status::Config, "cv_folds must be >= 2");
  if (jobs < 1) fail(Status::Config, "jobs must be >= 1");
  if (slate_size < 2) fail(Status::Config, "slate_size must be >= 2");
  std::set<uint64_t> distinct(cv_seeds.begin(), cv_seeds.end());
  if (distinct.size() != cv_seeds.size())
    fail(Status::Config, "cv_seeds must be distinct");
  if (data_root.empty()) fail(Status::Config, "data_root is required");
  if (output_dir.empty()) fail(Status::Config, "output_dir is required");
  if (cache_dir.empty()) fail(Status::Config, "cache_dir is required");
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Status::Io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Status::Config, "config parse error: " + std::string(e.what()));
  }

  PipelineConfig cfg;
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  try {
    if (!j.contains("data_root"))
      fail(Status::Config, "config: data_root is required");
    cfg.data_root = resolve(j.at("data_root").get<std::string>());
    cfg.output_dir = resolve(j.value("output_dir", std::string("out")));
    cfg.cache_dir = resolve(j.value("cache_dir", std::string("cache")));

    if (j.contains("source_markets"))
      cfg.source_markets = j.at("source_markets").get<std::vector<std::string>>();
    if (j.contains("target_markets"))
      cfg.target_markets = j.at("target_markets").get<std::vector<std::string>>();
    if (j.contains("combo_filter"))
      cfg.combo_filter = j.at("combo_filter").get<std::vector<std::string>>();
    if (j.contains("recommenders"))
      cfg.recommenders = j.at("recommenders").get<std::vector<std::string>>();

    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      cfg.budget_stage1 = b.value("stage1", cfg.budget_stage1);
      cfg.budget_stage2 = b.value("stage2", cfg.budget_stage2);
      cfg.budget_stage3 = b.value("stage3", cfg.budget_stage3);
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("cv_seeds"))
      cfg.cv_seeds = j.at("cv_seeds").get<std::vector<uint64_t>>();
    cfg.cv_folds = j.value("cv_folds", cfg.cv_folds);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.unit_rating_value = j.value("unit_rating_value", cfg.unit_rating_value);
    cfg.slate_size = j.value("slate_size", cfg.slate_size);

    if (j.contains("ranker")) {
      const auto& r = j.at("ranker");
      cfg.ranker_trees = r.value("n_trees", cfg.ranker_trees);
      cfg.ranker_patience = r.value("patience", cfg.ranker_patience);
    }

    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      cfg.synth.n_source_markets =
          s.value("sources", cfg.synth.n_source_markets);
      cfg.synth.n_target_markets =
          s.value("targets", cfg.synth.n_target_markets);
      cfg.synth.users_per_market =
          s.value("users_per_market", cfg.synth.users_per_market);
      cfg.synth.catalog_size = s.value("catalog_size", cfg.synth.catalog_size);
      cfg.synth.latent_dim = s.value("latent_dim", cfg.synth.latent_dim);
      cfg.synth.noise = s.value("noise", cfg.synth.noise);
      cfg.synth.min_ratings = s.value("min_ratings", cfg.synth.min_ratings);
      cfg.synth.max_ratings = s.value("max_ratings", cfg.synth.max_ratings);
      cfg.synth.slate_size = cfg.slate_size;
      cfg.synth.seed = s.value("seed", cfg.seed);
    } else {
      cfg.synth.slate_size = cfg.slate_size;
      cfg.synth.seed = cfg.seed;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Status::Config, "config field error: " + std::string(e.what()));
  }

  if (cfg.cv_seeds.empty()) {
    for (uint64_t i = 0; i < 3; ++i)
      cfg.cv_seeds.push_back(mix_seed(cfg.seed, 0xcf0 + i));
  }
  cfg.validate();
  return cfg;
}

}  // namespace crossrank
