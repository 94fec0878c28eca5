#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ranking_data.hpp"

namespace crossrank {

// Grouped k-fold assignments, one partition per seed. Every group lands in
// exactly one fold per seed; fold sizes differ by at most one.
struct CvPlan {
  int k = 5;
  std::vector<uint64_t> seeds;
  std::vector<std::vector<int32_t>> fold_of_group;  // [seed][group]

  int64_t n_groups() const {
    return fold_of_group.empty() ? 0
                                 : static_cast<int64_t>(fold_of_group[0].size());
  }
};

CvPlan make_cv_plan(std::span<const std::string> group_ids, int k,
                    std::span<const uint64_t> seeds);

// Anything that scores a RankingDataset; lets tests drive the CV machinery
// with stub models.
class CvModel {
 public:
  virtual ~CvModel() = default;
  virtual std::vector<double> predict(const RankingDataset& data) const = 0;
};

using CvFit = std::function<std::unique_ptr<CvModel>(
    const RankingDataset& train, const RankingDataset& holdout, uint64_t seed)>;

struct CvPrediction {
  // per validation row: mean over seeds of the fold-holdout prediction
  std::vector<double> oof;
  // per test row: mean over (k folds x seeds) model predictions
  std::vector<double> test;
};

// Per seed and fold, fits on the other k-1 folds and predicts the held-out
// fold plus the full test set. No model ever predicts a group it trained on.
CvPrediction cv_train_predict(const RankingDataset& valid,
                              const RankingDataset& test, const CvPlan& plan,
                              const CvFit& fit, int jobs = 1);

}  // namespace crossrank
