#include "eval.hpp"

#include <cmath>
#include <cstdio>

#include "common.hpp"
#include "ranking.hpp"
#include "status.hpp"

namespace crossrank {

double ndcg_from_rank(int64_t rank_1based, int k) {
  if (rank_1based < 1) fail(Status::InvalidArgument, "rank must be >= 1");
  if (rank_1based > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank_1based) + 1.0);
}

double ndcg_at_k(std::span<const std::string> ranked,
                 const std::string& positive, int k) {
  for (size_t r = 0; r < ranked.size(); ++r) {
    if (ranked[r] == positive)
      return ndcg_from_rank(static_cast<int64_t>(r) + 1, k);
  }
  fail(Status::InvalidArgument, "positive item " + positive + " not in candidate list");
}

GroupBreakdown evaluate_run(
    std::span<const ScoredSlate> slates,
    const std::unordered_map<std::string, std::string>& qrels,
    const std::unordered_map<std::string, int64_t>& profile_lengths,
    int k) {
  GroupBreakdown out;
  std::array<double, kNumProfileGroups> group_sum{};
  double total = 0;
  for (const auto& slate : slates) {
    auto q = qrels.find(slate.user);
    if (q == qrels.end())
      fail(Status::InvalidArgument, "no qrel for user " + slate.user);
    auto len = profile_lengths.find(slate.user);
    if (len == profile_lengths.end())
      fail(Status::InvalidArgument, "no profile length for user " + slate.user);

    const auto order = rank_order(slate.score, slate.tie_score, slate.items);
    int64_t rank = -1;
    for (size_t r = 0; r < order.size(); ++r) {
      if (slate.items[order[r]] == q->second) {
        rank = static_cast<int64_t>(r) + 1;
        break;
      }
    }
    if (rank < 0)
      fail(Status::InvalidArgument,
           "positive item " + q->second + " not in slate of user " + slate.user);
    const double ndcg = ndcg_from_rank(rank, k);
    const int g = static_cast<int>(assign_group(len->second));
    group_sum[g] += ndcg;
    out.group_count[g]++;
    total += ndcg;
    out.user_count++;
  }
  for (int g = 0; g < kNumProfileGroups; ++g)
    out.group_mean[g] = out.group_count[g] ? group_sum[g] / out.group_count[g] : 0.0;
  out.mean = out.user_count ? total / out.user_count : 0.0;
  return out;
}

std::string EvalReport::to_tsv() const {
  std::string out =
      "dataset\tmodel\tvariant\tndcg10\tshort\tquite_short\tquite_long\tlong"
      "\tn_short\tn_quite_short\tn_quite_long\tn_long\n";
  for (const auto& row : rows) {
    out += row.dataset + '\t' + row.model + '\t' + row.variant + '\t' +
           format_double(row.stats.mean);
    for (int g = 0; g < kNumProfileGroups; ++g)
      out += '\t' + format_double(row.stats.group_mean[g]);
    for (int g = 0; g < kNumProfileGroups; ++g)
      out += '\t' + std::to_string(row.stats.group_count[g]);
    out += '\n';
  }
  return out;
}

std::string EvalReport::to_text() const {
  auto fmt = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.5f", v);
    return std::string(buf);
  };
  size_t w_dataset = 7, w_model = 5, w_variant = 7;
  for (const auto& row : rows) {
    w_dataset = std::max(w_dataset, row.dataset.size());
    w_model = std::max(w_model, row.model.size());
    w_variant = std::max(w_variant, row.variant.size());
  }
  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  std::string out = pad("dataset", w_dataset) + "  " + pad("model", w_model) +
                    "  " + pad("variant", w_variant) +
                    "  short    q.short  q.long   long     avg\n";
  for (const auto& row : rows) {
    out += pad(row.dataset, w_dataset) + "  " + pad(row.model, w_model) + "  " +
           pad(row.variant, w_variant);
    for (int g = 0; g < kNumProfileGroups; ++g)
      out += "  " + fmt(row.stats.group_mean[g]);
    out += "  " + fmt(row.stats.mean) + '\n';
  }
  return out;
}

}  // namespace crossrank
