#include <doctest.h>

#include <map>
#include <set>

#include "fusion.hpp"
#include "status.hpp"
#include "test_util.hpp"

using namespace crossrank;

namespace {

MarketBundle bundle_with(
    const std::string& market,
    const std::vector<std::tuple<std::string, std::string, double>>& train,
    const std::vector<std::tuple<std::string, std::string, double>>& core) {
  MarketBundle bundle;
  bundle.market_id = market;
  bundle.train = testutil::store_from(train);
  bundle.train_5core = testutil::store_from(core);
  return bundle;
}

std::map<std::pair<std::string, std::string>, double> fused_values(
    const FusedDataset& fused) {
  std::map<std::pair<std::string, std::string>, double> out;
  const auto& store = fused.store;
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto idx = store.by_user.row_indices(u);
    const auto val = store.by_user.row_values(u);
    for (size_t k = 0; k < idx.size(); ++k)
      out[{store.user_map.token(u), store.item_map.token(idx[k])}] = val[k];
  }
  return out;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("enumerate_combos yields 24 datasets for 3 sources x 2 targets") {
  const auto combos = enumerate_combos({"s1", "s2", "s3"}, {"t1", "t2"});
  CHECK(combos.size() == 24);
  std::set<std::string> ids;
  for (const auto& c : combos) {
    CHECK_FALSE(c.targets.empty());
    ids.insert(c.id);
  }
  CHECK(ids.size() == 24);  // unique, order-canonical ids
  CHECK(ids.count("t1") == 1);
  CHECK(ids.count("s1-s2-s3-t1-t2") == 1);
}

TEST_CASE("enumerate_combos degenerate inputs") {
  const auto single = enumerate_combos({}, {"t1"});
  REQUIRE(single.size() == 1);
  CHECK(single[0].id == "t1");
  CHECK(enumerate_combos({"s1", "s2"}, {}).empty());
}

TEST_CASE("16 combos contain a fixed target (enumeration oracle)") {
  const auto combos = enumerate_combos({"s1", "s2", "s3"}, {"t1", "t2"});
  // oracle: brute-force count over all member subsets
  int64_t expected = 0;
  for (int sm = 0; sm < 8; ++sm)
    for (int tm = 1; tm < 4; ++tm)
      if (tm & 1) expected++;  // target bit 0 = t1
  int64_t got = 0;
  for (const auto& c : combos)
    if (c.contains("t1")) got++;
  CHECK(expected == 16);
  CHECK(got == expected);
}

TEST_CASE("fuse averages raw and substituted preprocessed ratings") {
  // user u has a raw rating 3 and a preprocessed unit entry for the same item
  auto t1 = bundle_with("t1", {{"u", "x", 3.0}}, {{"u", "x", 1.0}});
  std::map<std::string, const MarketBundle*> bundles{{"t1", &t1}};
  const auto fused = fuse(make_combo({}, {"t1"}), bundles, 4.0);
  const auto values = fused_values(fused);
  CHECK(values.at({"u", "x"}) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("fuse collapses shared item tokens to one column") {
  auto s1 = bundle_with("s1", {{"a", "B00X", 4.0}}, {});
  auto t1 = bundle_with("t1", {{"b", "B00X", 2.0}}, {});
  std::map<std::string, const MarketBundle*> bundles{{"s1", &s1}, {"t1", &t1}};
  const auto fused = fuse(make_combo({"s1"}, {"t1"}), bundles, 4.0);
  CHECK(fused.store.n_items() == 1);
  CHECK(fused.store.n_users() == 2);
  CHECK(fused.user_market.size() == 2);
}

TEST_CASE("single-market fuse equals the market's own dedup union") {
  auto t1 = bundle_with("t1", {{"u1", "i1", 3.0}, {"u1", "i2", 5.0}},
                        {{"u1", "i1", 1.0}, {"u2", "i2", 1.0}});
  std::map<std::string, const MarketBundle*> bundles{{"t1", &t1}};
  const auto fused = fuse(make_combo({}, {"t1"}), bundles, 4.0);
  const auto values = fused_values(fused);
  CHECK(values.size() == 3);
  CHECK(values.at({"u1", "i1"}) == doctest::Approx(3.5));  // (3 + 4) / 2
  CHECK(values.at({"u1", "i2"}) == doctest::Approx(5.0));
  CHECK(values.at({"u2", "i2"}) == doctest::Approx(4.0));  // substituted unit
}

TEST_CASE("fuse rejects user tokens shared across markets") {
  auto s1 = bundle_with("s1", {{"dup", "i1", 3.0}}, {});
  auto t1 = bundle_with("t1", {{"dup", "i2", 2.0}}, {});
  std::map<std::string, const MarketBundle*> bundles{{"s1", &s1}, {"t1", &t1}};
  CHECK_THROWS_AS(fuse(make_combo({"s1"}, {"t1"}), bundles, 4.0), Error);
}

TEST_CASE("fused user count is the sum over member markets") {
  auto s1 = bundle_with("s1", {{"a1", "i1", 3.0}, {"a2", "i2", 4.0}}, {});
  auto s2 = bundle_with("s2", {{"b1", "i1", 2.0}}, {});
  auto t1 = bundle_with("t1", {{"c1", "i3", 5.0}, {"c2", "i1", 1.0}}, {});
  std::map<std::string, const MarketBundle*> bundles{
      {"s1", &s1}, {"s2", &s2}, {"t1", &t1}};
  const auto fused = fuse(make_combo({"s1", "s2"}, {"t1"}), bundles, 4.0);
  CHECK(fused.store.n_users() == 5);
  CHECK(fused.store.n_items() <= 3 + 1 + 2);
  // every fused rating is a mean, so it stays inside the input range
  for (double v : fused.store.by_user.values) {
    CHECK(v >= 1.0);
    CHECK(v <= 5.0);
  }
}

TEST_CASE("fuse is independent of bundle map iteration order") {
  auto s1 = bundle_with("s1", {{"a", "i1", 2.0}, {"a", "i2", 4.0}},
                        {{"a", "i1", 1.0}});
  auto t1 = bundle_with("t1", {{"b", "i2", 5.0}}, {{"b", "i3", 1.0}});
  const auto combo = make_combo({"s1"}, {"t1"});
  std::map<std::string, const MarketBundle*> forward{{"s1", &s1}, {"t1", &t1}};
  std::map<std::string, const MarketBundle*, std::greater<>> rev_map;
  std::map<std::string, const MarketBundle*> reversed{{"t1", &t1}, {"s1", &s1}};
  CHECK(fused_values(fuse(combo, forward, 4.0)) ==
        fused_values(fuse(combo, reversed, 4.0)));
}

}  // TEST_SUITE
