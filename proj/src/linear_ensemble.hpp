#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "market_io.hpp"
#include "profile_groups.hpp"
#include "score_table.hpp"
#include "tuner.hpp"

namespace crossrank {

// Per-unit coefficient c in [0,1] and exponent e in [0.25,4] for each of the
// four profile-length groups.
struct GroupedParams {
  struct CE {
    double c = 1.0;
    double e = 1.0;
  };
  std::vector<std::string> units;
  std::vector<std::array<CE, kNumProfileGroups>> per_unit;  // aligned with units

  std::string to_tsv() const;
  static GroupedParams from_tsv(const std::string& text);
};

// Per slate: x -> (x - min) / (max - min); a constant slate maps to 0.5.
// Errors on non-finite input.
ScoreTable normalize_minmax_userwise(const ScoreTable& table);
void normalize_minmax_inplace(std::span<double> slate_scores);

// Eq.-style combination: s(u,i) = sum_R c_R(g(u)) * score_R(u,i)^(e_R(g(u))).
// `profile_lengths` holds one length per slate. Scores must already be
// normalized into [0,1].
std::vector<double> combine(const ScoreTable& normalized,
                            const GroupedParams& params,
                            std::span<const int64_t> profile_lengths);

struct OptimizeResult {
  GroupedParams params;
  double objective = 0;  // mean NDCG@10 on the validation slates
};

// Tunes all (c, e) jointly with tuner::search; objective is mean NDCG@10 of
// the validation slates ranked by the combined score. `normalized` must be
// user-wise min-max normalized and every slate must have a positive.
OptimizeResult optimize_params(const std::vector<CandidateSlate>& slates,
                               const ScoreTable& normalized,
                               std::span<const int64_t> profile_lengths,
                               int budget, uint64_t seed, int k = 10);

}  // namespace crossrank
