#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "fusion.hpp"
#include "market_io.hpp"
#include "ranking.hpp"

namespace crossrank {

// Full tie-broken candidate ordering: boosted score desc, linear score desc,
// item token asc.
inline std::vector<int32_t> tie_break(std::span<const double> boosted,
                                      std::span<const double> linear,
                                      std::span<const std::string> tokens) {
  return rank_order(boosted, linear, tokens);
}

// Stage-oriented orchestrator with content-hash caching. Every artifact is
// written atomically; rerunning a stage with unchanged inputs is a no-op.
class PipelineRunner {
 public:
  struct StageContext;

  explicit PipelineRunner(PipelineConfig cfg);

  void set_jobs(int jobs);
  void set_seed_override(uint64_t seed);
  void set_combo_filter(const std::string& expr);  // comma-separated terms
  void set_cache_dir(const std::filesystem::path& dir);

  void run_synth();
  void run_prepare();
  void run_stage1();
  void run_stage2();
  void run_stage3();
  std::string run_evaluate();  // writes report files, returns the text table
  void run_submit();

  const PipelineConfig& config() const { return cfg_; }
  // combos selected by the active filter (sorted by id)
  std::vector<MarketCombo> active_combos() const;

 private:
  void journal(const std::string& artifact, const std::string& status,
               int64_t wall_ms, std::optional<double> objective);
  StageContext& context();

  PipelineConfig cfg_;
  std::vector<std::string> filter_terms_;
  std::unique_ptr<StageContext> ctx_;
};

}  // namespace crossrank
