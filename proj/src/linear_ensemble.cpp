#include "linear_ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "eval.hpp"
#include "ranking.hpp"
#include "status.hpp"

namespace crossrank {

int64_t ScoreTable::unit_index(const std::string& name) const {
  for (size_t i = 0; i < units.size(); ++i)
    if (units[i] == name) return static_cast<int64_t>(i);
  return -1;
}

std::string GroupedParams::to_tsv() const {
  std::string out = "unit\tgroup\tc\te\n";
  for (size_t u = 0; u < units.size(); ++u) {
    for (int g = 0; g < kNumProfileGroups; ++g) {
      out += units[u];
      out += '\t';
      out += profile_group_name(static_cast<ProfileGroup>(g));
      out += '\t';
      out += format_double(per_unit[u][g].c);
      out += '\t';
      out += format_double(per_unit[u][g].e);
      out += '\n';
    }
  }
  return out;
}

GroupedParams GroupedParams::from_tsv(const std::string& text) {
  GroupedParams params;
  const auto lines = split(text, '\n');
  for (size_t n = 0; n < lines.size(); ++n) {
    auto line = strip_cr(lines[n]);
    if (line.empty() || (n == 0 && line.substr(0, 4) == "unit")) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4) fail(Status::Parse, "grouped params: bad line");
    const std::string unit(cols[0]);
    int g = -1;
    for (int i = 0; i < kNumProfileGroups; ++i)
      if (cols[1] == profile_group_name(static_cast<ProfileGroup>(i))) g = i;
    if (g < 0) fail(Status::Parse, "grouped params: bad group " + std::string(cols[1]));
    double c, e;
    if (!parse_double(cols[2], &c) || !parse_double(cols[3], &e))
      fail(Status::Parse, "grouped params: bad numbers");
    int64_t idx = -1;
    for (size_t u = 0; u < params.units.size(); ++u)
      if (params.units[u] == unit) idx = static_cast<int64_t>(u);
    if (idx < 0) {
      params.units.push_back(unit);
      params.per_unit.emplace_back();
      idx = static_cast<int64_t>(params.units.size()) - 1;
    }
    params.per_unit[idx][g] = {c, e};
  }
  return params;
}

void normalize_minmax_inplace(std::span<double> slate_scores) {
  if (slate_scores.empty())
    fail(Status::InvalidArgument, "normalize: empty slate");
  double lo = slate_scores[0], hi = slate_scores[0];
  for (double v : slate_scores) {
    if (!std::isfinite(v))
      fail(Status::Numeric, "normalize: non-finite score");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    for (double& v : slate_scores) v = 0.5;
    return;
  }
  const double range = hi - lo;
  for (double& v : slate_scores) v = (v - lo) / range;
}

ScoreTable normalize_minmax_userwise(const ScoreTable& table) {
  ScoreTable out = table;
  const size_t n_units = table.n_units();
  std::vector<double> column;
  for (int64_t s = 0; s < table.n_slates(); ++s) {
    const int64_t begin = table.offsets[s], end = table.offsets[s + 1];
    for (size_t u = 0; u < n_units; ++u) {
      column.resize(end - begin);
      for (int64_t r = begin; r < end; ++r) column[r - begin] = table.at(r, u);
      normalize_minmax_inplace(column);
      for (int64_t r = begin; r < end; ++r) out.at(r, u) = column[r - begin];
    }
  }
  return out;
}

std::vector<double> combine(const ScoreTable& normalized,
                            const GroupedParams& params,
                            std::span<const int64_t> profile_lengths) {
  if (static_cast<int64_t>(profile_lengths.size()) != normalized.n_slates())
    fail(Status::InvalidArgument, "combine: profile length count mismatch");
  std::vector<size_t> unit_of(params.units.size());
  for (size_t u = 0; u < params.units.size(); ++u) {
    const int64_t idx = normalized.unit_index(params.units[u]);
    if (idx < 0)
      fail(Status::InvalidArgument,
           "combine: no score column for unit " + params.units[u]);
    unit_of[u] = static_cast<size_t>(idx);
  }
  std::vector<double> out(normalized.n_rows(), 0.0);
  for (int64_t s = 0; s < normalized.n_slates(); ++s) {
    const int g = static_cast<int>(assign_group(profile_lengths[s]));
    for (int64_t r = normalized.offsets[s]; r < normalized.offsets[s + 1]; ++r) {
      double acc = 0;
      for (size_t u = 0; u < params.units.size(); ++u) {
        const auto& ce = params.per_unit[u][g];
        if (ce.c == 0.0) continue;
        acc += ce.c * std::pow(normalized.at(r, unit_of[u]), ce.e);
      }
      out[r] = acc;
    }
  }
  return out;
}

namespace {

double mean_ndcg(const std::vector<CandidateSlate>& slates,
                 const ScoreTable& table, std::span<const double> combined,
                 int k) {
  double total = 0;
  for (size_t s = 0; s < slates.size(); ++s) {
    const auto& slate = slates[s];
    if (!slate.positive)
      fail(Status::InvalidArgument,
           "optimize_params: slate without positive for user " + slate.user);
    const int64_t begin = table.offsets[s];
    const int64_t n = table.offsets[s + 1] - begin;
    std::span<const double> scores(combined.data() + begin,
                                   static_cast<size_t>(n));
    const auto order = rank_order(scores, {}, slate.candidates);
    int64_t rank = -1;
    for (int64_t r = 0; r < n; ++r) {
      if (slate.candidates[order[r]] == *slate.positive) {
        rank = r + 1;
        break;
      }
    }
    total += ndcg_from_rank(rank, k);
  }
  return slates.empty() ? 0.0 : total / static_cast<double>(slates.size());
}

}  // namespace

OptimizeResult optimize_params(const std::vector<CandidateSlate>& slates,
                               const ScoreTable& normalized,
                               std::span<const int64_t> profile_lengths,
                               int budget, uint64_t seed, int k) {
  if (static_cast<int64_t>(slates.size()) != normalized.n_slates())
    fail(Status::InvalidArgument, "optimize_params: slate count mismatch");
  SearchSpace space;
  for (const auto& unit : normalized.units) {
    for (int g = 0; g < kNumProfileGroups; ++g) {
      const std::string suffix = unit + ":" + std::to_string(g);
      space.real("c:" + suffix, 0.0, 1.0);
      space.log_real("e:" + suffix, 0.25, 4.0);
    }
  }
  auto config_to_params = [&](const TrialConfig& config) {
    GroupedParams params;
    params.units = normalized.units;
    params.per_unit.resize(params.units.size());
    for (size_t u = 0; u < params.units.size(); ++u) {
      for (int g = 0; g < kNumProfileGroups; ++g) {
        const std::string suffix = params.units[u] + ":" + std::to_string(g);
        params.per_unit[u][g].c = get_real(config, "c:" + suffix);
        params.per_unit[u][g].e = get_real(config, "e:" + suffix);
      }
    }
    return params;
  };
  const Trial best = search(
      space,
      [&](const TrialConfig& config) {
        const auto params = config_to_params(config);
        const auto combined = combine(normalized, params, profile_lengths);
        return mean_ndcg(slates, normalized, combined, k);
      },
      budget, seed);
  OptimizeResult result;
  result.params = config_to_params(best.config);
  result.objective = best.objective;
  return result;
}

}  // namespace crossrank
