#include "cross_validation.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

CvPlan make_cv_plan(std::span<const std::string> group_ids, int k,
                    std::span<const uint64_t> seeds) {
  const auto n = static_cast<int64_t>(group_ids.size());
  if (k < 2) fail(Status::InvalidArgument, "cv plan: k must be >= 2");
  if (n < k)
    fail(Status::InvalidArgument,
         "cv plan: " + std::to_string(n) + " groups < k = " + std::to_string(k));
  if (seeds.empty()) fail(Status::InvalidArgument, "cv plan: no seeds");
  CvPlan plan;
  plan.k = k;
  plan.seeds.assign(seeds.begin(), seeds.end());
  for (uint64_t seed : seeds) {
    std::vector<int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int32_t> fold(n);
    for (int64_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int32_t>(i % k);
    plan.fold_of_group.push_back(std::move(fold));
  }
  return plan;
}

CvPrediction cv_train_predict(const RankingDataset& valid,
                              const RankingDataset& test, const CvPlan& plan,
                              const CvFit& fit, int jobs) {
  const int64_t n_groups = valid.n_groups();
  if (plan.n_groups() != n_groups)
    fail(Status::InvalidArgument, "cv_train_predict: plan group count mismatch");
  const size_t n_seeds = plan.seeds.size();
  const int k = plan.k;

  std::vector<std::vector<double>> oof_by_seed(
      n_seeds, std::vector<double>(valid.n_rows(), 0.0));
  std::vector<std::vector<double>> test_by_job(
      n_seeds * static_cast<size_t>(k));

  parallel_for(0, static_cast<int64_t>(n_seeds) * k, jobs, [&](int64_t job) {
    const auto s = static_cast<size_t>(job / k);
    const auto f = static_cast<int32_t>(job % k);
    const auto& fold_of = plan.fold_of_group[s];
    std::vector<int32_t> train_groups, holdout_groups;
    for (int64_t g = 0; g < n_groups; ++g) {
      (fold_of[g] == f ? holdout_groups : train_groups)
          .push_back(static_cast<int32_t>(g));
    }
    const RankingDataset train_ds = subset_groups(valid, train_groups);
    std::vector<int64_t> holdout_rows;
    const RankingDataset holdout_ds =
        subset_groups(valid, holdout_groups, &holdout_rows);
    const auto model = fit(train_ds, holdout_ds, mix_seed(plan.seeds[s], f));
    const auto holdout_pred = model->predict(holdout_ds);
    for (size_t r = 0; r < holdout_rows.size(); ++r)
      oof_by_seed[s][holdout_rows[r]] = holdout_pred[r];
    if (test.n_rows() > 0) test_by_job[job] = model->predict(test);
  });

  CvPrediction out;
  out.oof.assign(valid.n_rows(), 0.0);
  for (const auto& seed_oof : oof_by_seed)
    for (int64_t r = 0; r < valid.n_rows(); ++r) out.oof[r] += seed_oof[r];
  for (double& v : out.oof) v /= static_cast<double>(n_seeds);

  out.test.assign(test.n_rows(), 0.0);
  if (test.n_rows() > 0) {
    for (const auto& job_pred : test_by_job)
      for (int64_t r = 0; r < test.n_rows(); ++r) out.test[r] += job_pred[r];
    for (double& v : out.test)
      v /= static_cast<double>(n_seeds) * static_cast<double>(k);
  }
  return out;
}

}  // namespace crossrank
