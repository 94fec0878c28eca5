#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ranking_data.hpp"

namespace crossrank {

// LambdaRank gradients and second-order terms for NDCG@k with binary labels.
// For every (positive i, negative j) pair:
//   rho    = 1 / (1 + exp(sigma * (s_i - s_j)))
//   weight = |delta NDCG@k from swapping i and j| against the current ranking
//   grad_i -= sigma * rho * weight        grad_j += sigma * rho * weight
//   hess   += sigma^2 * rho * (1 - rho) * weight   (both i and j)
// Pair weights use the ranking induced by `scores` (ties by row index) and an
// ideal DCG of 1. Groups without a positive are skipped and counted.
struct LambdaStats {
  std::vector<double> grad;
  std::vector<double> hess;
  int64_t groups_without_positive = 0;
};

LambdaStats lambda_gradients(std::span<const double> scores,
                             const RankingDataset& data, int k = 10,
                             double sigma = 1.0);

}  // namespace crossrank
