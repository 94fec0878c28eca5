#pragma once

#include <map>
#include <string>
#include <vector>

#include "market_io.hpp"

namespace crossrank {

// A source-subset x target-subset market combination. `id` joins member
// markets with '-' in canonical (sorted) order, e.g. "s1-s3-t1".
struct MarketCombo {
  std::vector<std::string> sources;  // sorted
  std::vector<std::string> targets;  // sorted, non-empty
  std::string id;

  std::vector<std::string> members() const;
  bool contains(const std::string& market) const;
};

MarketCombo make_combo(std::vector<std::string> sources,
                       std::vector<std::string> targets);

// All (source subset) x (non-empty target subset) combinations, sorted by id.
// Empty target list yields an empty result.
std::vector<MarketCombo> enumerate_combos(
    const std::vector<std::string>& sources,
    const std::vector<std::string>& targets);

// Interactions of the member markets joined into one store: user sets are
// disjoint across markets, item tokens shared across markets collapse to one
// column.
struct FusedDataset {
  MarketCombo combo;
  InteractionStore store;
  std::vector<std::string> user_market;  // per dense user index
};

// Per member market, takes train ratings plus train_5core entries with the
// unit rating replaced by `unit_rating_value`, then averages all values per
// (user, item). A user token appearing in two markets is a hard error.
FusedDataset fuse(const MarketCombo& combo,
                  const std::map<std::string, const MarketBundle*>& bundles,
                  double unit_rating_value = 4.0);

}  // namespace crossrank
