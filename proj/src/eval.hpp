#pragma once

#include <array>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "market_io.hpp"
#include "profile_groups.hpp"

namespace crossrank {

// Rank-based NDCG with one binary positive: 1/log2(rank+1) for rank <= k,
// else 0 (ideal DCG is 1).
double ndcg_from_rank(int64_t rank_1based, int k = 10);

// NDCG@k of an already-ranked candidate list. Errors if the positive is
// missing from the list.
double ndcg_at_k(std::span<const std::string> ranked,
                 const std::string& positive, int k = 10);

// Mean NDCG plus the per-profile-group breakdown.
struct GroupBreakdown {
  double mean = 0;
  std::array<double, kNumProfileGroups> group_mean{};
  std::array<int64_t, kNumProfileGroups> group_count{};
  int64_t user_count = 0;
};

// Ranks every slate with the full tie-broken ordering and aggregates NDCG@k
// by profile-length group. Every slate user must have a qrel and a profile
// length.
GroupBreakdown evaluate_run(
    std::span<const ScoredSlate> slates,
    const std::unordered_map<std::string, std::string>& qrels,
    const std::unordered_map<std::string, int64_t>& profile_lengths,
    int k = 10);

struct EvalRow {
  std::string dataset;
  std::string model;
  std::string variant;
  GroupBreakdown stats;
};

// Per-dataset, per-model validation report; renders as TSV and as an
// aligned text table (dataset rows, group columns).
struct EvalReport {
  std::vector<EvalRow> rows;
  std::string to_tsv() const;
  std::string to_text() const;
};

}  // namespace crossrank
