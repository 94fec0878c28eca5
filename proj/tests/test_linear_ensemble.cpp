#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "linear_ensemble.hpp"
#include "ranking.hpp"
#include "status.hpp"

using namespace crossrank;

namespace {

std::vector<CandidateSlate> make_slates(int n_slates, int n_candidates,
                                        uint64_t positive_seed) {
  std::mt19937_64 rng(positive_seed);
  std::vector<CandidateSlate> slates(n_slates);
  for (int s = 0; s < n_slates; ++s) {
    slates[s].user = "u" + std::to_string(s);
    for (int c = 0; c < n_candidates; ++c)
      slates[s].candidates.push_back("i" + std::to_string(c));
    std::uniform_int_distribution<int> pick(0, n_candidates - 1);
    slates[s].positive = slates[s].candidates[pick(rng)];
  }
  return slates;
}

ScoreTable table_for(const std::vector<CandidateSlate>& slates,
                     std::vector<std::string> units) {
  ScoreTable table;
  table.units = std::move(units);
  for (const auto& slate : slates)
    table.add_slate(static_cast<int64_t>(slate.candidates.size()));
  return table;
}

}  // namespace

TEST_SUITE("linear_ensemble") {

TEST_CASE("profile-length groups use the fixed thresholds") {
  CHECK(assign_group(0) == ProfileGroup::Short);
  CHECK(assign_group(4) == ProfileGroup::Short);
  CHECK(assign_group(5) == ProfileGroup::QuiteShort);
  CHECK(assign_group(7) == ProfileGroup::QuiteShort);
  CHECK(assign_group(8) == ProfileGroup::QuiteLong);
  CHECK(assign_group(11) == ProfileGroup::QuiteLong);
  CHECK(assign_group(12) == ProfileGroup::Long);
  CHECK(assign_group(500) == ProfileGroup::Long);
}

TEST_CASE("min-max normalization basics") {
  std::vector<double> a{2, 4, 6};
  normalize_minmax_inplace(a);
  CHECK(a == std::vector<double>{0, 0.5, 1});
  std::vector<double> b{3, 3};
  normalize_minmax_inplace(b);
  CHECK(b == std::vector<double>{0.5, 0.5});
  std::vector<double> c{0, 1};
  normalize_minmax_inplace(c);
  CHECK(c == std::vector<double>{0, 1});
  std::vector<double> d{1, std::nan("")};
  CHECK_THROWS_AS(normalize_minmax_inplace(d), Error);
}

TEST_CASE("normalization is idempotent on non-degenerate slates") {
  auto slates = make_slates(4, 10, 1);
  auto table = table_for(slates, {"a", "b"});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(-3.0, 9.0);
  for (auto& v : table.values) v = unit(rng);
  const auto once = normalize_minmax_userwise(table);
  const auto twice = normalize_minmax_userwise(once);
  for (size_t i = 0; i < once.values.size(); ++i)
    CHECK(once.values[i] == doctest::Approx(twice.values[i]).epsilon(1e-12));
}

TEST_CASE("combine evaluates the grouped power sum") {
  auto slates = make_slates(1, 3, 3);
  auto table = table_for(slates, {"only"});
  table.at(0, 0) = 0.25;
  table.at(1, 0) = 0.5;
  table.at(2, 0) = 1.0;
  GroupedParams params;
  params.units = {"only"};
  params.per_unit.resize(1);
  for (int g = 0; g < kNumProfileGroups; ++g) params.per_unit[0][g] = {1.0, 2.0};
  const std::vector<int64_t> lengths{3};
  const auto out = combine(table, params, lengths);
  CHECK(out[0] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("identity parameters reproduce the single unit") {
  auto slates = make_slates(2, 5, 4);
  auto table = table_for(slates, {"a"});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  GroupedParams params;
  params.units = {"a"};
  params.per_unit.resize(1);
  for (int g = 0; g < kNumProfileGroups; ++g) params.per_unit[0][g] = {1.0, 1.0};
  const std::vector<int64_t> lengths{2, 20};
  const auto out = combine(table, params, lengths);
  for (int64_t r = 0; r < table.n_rows(); ++r)
    CHECK(out[r] == doctest::Approx(table.at(r, 0)).epsilon(1e-15));
}

TEST_CASE("zero coefficients eliminate a unit") {
  auto slates = make_slates(1, 4, 6);
  auto table = table_for(slates, {"a", "b"});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  GroupedParams params;
  params.units = {"a", "b"};
  params.per_unit.resize(2);
  for (int g = 0; g < kNumProfileGroups; ++g) {
    params.per_unit[0][g] = {1.0, 3.7};
    params.per_unit[1][g] = {0.0, 2.0};
  }
  const std::vector<int64_t> lengths{9};
  const auto out = combine(table, params, lengths);
  for (int64_t r = 0; r < table.n_rows(); ++r)
    CHECK(out[r] == doctest::Approx(std::pow(table.at(r, 0), 3.7)).epsilon(1e-12));
}

TEST_CASE("combine rejects missing unit parameters") {
  auto slates = make_slates(1, 3, 8);
  auto table = table_for(slates, {"a"});
  GroupedParams params;
  params.units = {"ghost"};
  params.per_unit.resize(1);
  const std::vector<int64_t> lengths{1};
  CHECK_THROWS_AS(combine(table, params, lengths), Error);
}

TEST_CASE("powering preserves within-slate ranking for one unit") {
  auto slates = make_slates(6, 20, 9);
  auto table = table_for(slates, {"a"});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  const std::vector<int64_t> lengths{1, 5, 8, 12, 3, 40};
  for (const double e : {0.25, 0.7, 1.0, 2.5, 4.0}) {
    GroupedParams params;
    params.units = {"a"};
    params.per_unit.resize(1);
    for (int g = 0; g < kNumProfileGroups; ++g) params.per_unit[0][g] = {0.8, e};
    const auto out = combine(table, params, lengths);
    for (size_t s = 0; s < slates.size(); ++s) {
      const int64_t begin = table.offsets[s], n = table.offsets[s + 1] - begin;
      std::vector<double> raw(n), powered(n);
      for (int64_t r = 0; r < n; ++r) {
        raw[r] = table.at(begin + r, 0);
        powered[r] = out[begin + r];
      }
      CHECK(rank_order(raw, {}, slates[s].candidates) ==
            rank_order(powered, {}, slates[s].candidates));
    }
  }
}

TEST_CASE("rescaling all coefficients in a group keeps the ranking") {
  auto slates = make_slates(3, 12, 13);
  auto table = table_for(slates, {"a", "b", "c"});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  GroupedParams params;
  params.units = {"a", "b", "c"};
  params.per_unit.resize(3);
  for (size_t u = 0; u < 3; ++u)
    for (int g = 0; g < kNumProfileGroups; ++g)
      params.per_unit[u][g] = {0.2 + 0.3 * u, 0.5 + 0.7 * u};
  GroupedParams scaled = params;
  for (size_t u = 0; u < 3; ++u)
    for (int g = 0; g < kNumProfileGroups; ++g) scaled.per_unit[u][g].c *= 2.5;
  const std::vector<int64_t> lengths{2, 9, 30};
  const auto a = combine(table, params, lengths);
  const auto b = combine(table, scaled, lengths);
  for (size_t s = 0; s < slates.size(); ++s) {
    const int64_t begin = table.offsets[s], n = table.offsets[s + 1] - begin;
    std::vector<double> sa(a.begin() + begin, a.begin() + begin + n);
    std::vector<double> sb(b.begin() + begin, b.begin() + begin + n);
    CHECK(rank_order(sa, {}, slates[s].candidates) ==
          rank_order(sb, {}, slates[s].candidates));
  }
}

TEST_CASE("optimize_params on a single unit attains its standalone NDCG") {
  auto slates = make_slates(20, 30, 19);
  auto table = table_for(slates, {"solo"});
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  const auto normalized = normalize_minmax_userwise(table);
  std::vector<int64_t> lengths(slates.size(), 6);

  // standalone NDCG of the unit itself
  double standalone = 0;
  for (size_t s = 0; s < slates.size(); ++s) {
    const int64_t begin = table.offsets[s], n = table.offsets[s + 1] - begin;
    std::vector<double> scores(n);
    for (int64_t r = 0; r < n; ++r) scores[r] = normalized.at(begin + r, 0);
    const auto order = rank_order(scores, {}, slates[s].candidates);
    for (size_t r = 0; r < order.size(); ++r) {
      if (slates[s].candidates[order[r]] == *slates[s].positive) {
        standalone +=
            r < 10 ? 1.0 / std::log2(static_cast<double>(r) + 2.0) : 0.0;
        break;
      }
    }
  }
  standalone /= static_cast<double>(slates.size());

  const auto result = optimize_params(slates, normalized, lengths, 20, 31);
  CHECK(result.objective == doctest::Approx(standalone).epsilon(1e-12));
}

TEST_CASE("optimize_params finds an oracle column among noise") {
  auto slates = make_slates(40, 25, 29);
  auto table = table_for(slates, {"oracle", "n1", "n2", "n3"});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (size_t s = 0; s < slates.size(); ++s) {
    for (int64_t r = table.offsets[s]; r < table.offsets[s + 1]; ++r) {
      const auto& candidate = slates[s].candidates[r - table.offsets[s]];
      table.at(r, 0) = candidate == *slates[s].positive ? 1.0 : 0.0;
      for (size_t u = 1; u < 4; ++u) table.at(r, u) = unit(rng);
    }
  }
  const auto normalized = normalize_minmax_userwise(table);
  std::vector<int64_t> lengths;
  for (size_t s = 0; s < slates.size(); ++s)
    lengths.push_back(static_cast<int64_t>(s % 16));
  const auto result = optimize_params(slates, normalized, lengths, 100, 7);
  CHECK(result.objective >= 0.98);
}

TEST_CASE("optimize_params with budget 1 is the single seeded sample") {
  auto slates = make_slates(5, 10, 37);
  auto table = table_for(slates, {"a", "b"});
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : table.values) v = unit(rng);
  const auto normalized = normalize_minmax_userwise(table);
  std::vector<int64_t> lengths(slates.size(), 3);
  const auto a = optimize_params(slates, normalized, lengths, 1, 55);
  const auto b = optimize_params(slates, normalized, lengths, 1, 55);
  CHECK(a.params.to_tsv() == b.params.to_tsv());
  CHECK(a.objective == b.objective);
}

TEST_CASE("grouped params survive the TSV round trip") {
  GroupedParams params;
  params.units = {"a", "b"};
  params.per_unit.resize(2);
  for (size_t u = 0; u < 2; ++u)
    for (int g = 0; g < kNumProfileGroups; ++g)
      params.per_unit[u][g] = {0.125 * (g + 1), 0.5 + 0.25 * u};
  const auto restored = GroupedParams::from_tsv(params.to_tsv());
  REQUIRE(restored.units == params.units);
  for (size_t u = 0; u < 2; ++u) {
    for (int g = 0; g < kNumProfileGroups; ++g) {
      CHECK(restored.per_unit[u][g].c == params.per_unit[u][g].c);
      CHECK(restored.per_unit[u][g].e == params.per_unit[u][g].e);
    }
  }
}

}  // TEST_SUITE
