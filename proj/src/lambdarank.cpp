#include "lambdarank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "status.hpp"

namespace crossrank {

LambdaStats lambda_gradients(std::span<const double> scores,
                             const RankingDataset& data, int k, double sigma) {
  if (static_cast<int64_t>(scores.size()) != data.n_rows())
    fail(Status::InvalidArgument, "lambda_gradients: score count mismatch");
  LambdaStats stats;
  stats.grad.assign(scores.size(), 0.0);
  stats.hess.assign(scores.size(), 0.0);

  std::vector<int64_t> order;
  std::vector<double> discount;
  for (int64_t g = 0; g < data.n_groups(); ++g) {
    const int64_t begin = data.group_offsets[g];
    const int64_t end = data.group_offsets[g + 1];
    const int64_t n = end - begin;
    if (n < 2) continue;

    bool has_positive = false;
    for (int64_t r = begin; r < end; ++r)
      if (data.labels[r]) { has_positive = true; break; }
    if (!has_positive) {
      stats.groups_without_positive++;
      continue;
    }

    // rank-based discounts against the current ranking (ties by row index)
    order.resize(n);
    std::iota(order.begin(), order.end(), begin);
    std::stable_sort(order.begin(), order.end(),
                     [&](int64_t a, int64_t b) { return scores[a] > scores[b]; });
    discount.assign(n, 0.0);
    for (int64_t pos = 0; pos < n; ++pos) {
      if (pos < k)
        discount[order[pos] - begin] = 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    }

    for (int64_t i = begin; i < end; ++i) {
      if (!data.labels[i]) continue;
      for (int64_t j = begin; j < end; ++j) {
        if (data.labels[j]) continue;
        const double weight = std::abs(discount[i - begin] - discount[j - begin]);
        if (weight == 0.0) continue;
        const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[i] - scores[j])));
        const double g_term = sigma * rho * weight;
        const double h_term = sigma * sigma * rho * (1.0 - rho) * weight;
        stats.grad[i] -= g_term;
        stats.grad[j] += g_term;
        stats.hess[i] += h_term;
        stats.hess[j] += h_term;
      }
    }
  }
  return stats;
}

}  // namespace crossrank
