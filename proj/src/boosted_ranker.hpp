#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ranking_data.hpp"

namespace crossrank {

struct TreeNode {
  int32_t feature = -1;  // -1 marks a leaf
  float threshold = 0;   // left when value <= threshold
  bool missing_left = true;
  int32_t left = -1;
  int32_t right = -1;
  double value = 0;  // leaf value, unscaled
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict_row(const float* row) const;
  int64_t leaf_count() const;
};

struct RankerHyperParams {
  int64_t n_trees = 1000;
  int64_t max_leaves = 31;
  int64_t max_depth = 0;  // 0 = unlimited
  int64_t min_samples_leaf = 1;
  double learning_rate = 0.05;
  double feature_subsample = 1.0;
  double row_subsample = 1.0;  // fraction of groups bagged per tree
  double l2_leaf_reg = 1.0;
  double sigmoid_scale = 1.0;
  int64_t early_stopping_patience = 50;
  int ndcg_k = 10;

  void validate() const;
};

// Ordered trees with a shrinkage rate; prediction uses
// trees[0..best_iteration).
struct BoostedRanker {
  std::vector<RegressionTree> trees;
  int32_t n_features = 0;
  double learning_rate = 0.05;
  int64_t best_iteration = 0;
  // valid NDCG@k per recorded iteration; index 0 is the empty ensemble
  std::vector<double> valid_ndcg_trace;

  std::string to_text() const;
  static BoostedRanker from_text(const std::string& text);
};

// Greedy exact-split Newton boosting on LambdaRank gradients; deterministic
// given (data, hp, seed). Early stopping watches NDCG@k on `valid` and
// best_iteration is the argmax iteration.
BoostedRanker fit_ranker(const RankingDataset& train,
                         const RankingDataset& valid,
                         const RankerHyperParams& hp, uint64_t seed);

std::vector<double> predict(const BoostedRanker& ranker,
                            const RankingDataset& data);

// Mean NDCG@k over groups of a scored dataset (ties by row index).
double mean_group_ndcg(const RankingDataset& data,
                       std::span<const double> scores, int k = 10);

}  // namespace crossrank
