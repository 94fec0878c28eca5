#include "fusion.hpp"

#include <algorithm>

#include "status.hpp"

namespace crossrank {

std::vector<std::string> MarketCombo::members() const {
  std::vector<std::string> all = sources;
  all.insert(all.end(), targets.begin(), targets.end());
  std::sort(all.begin(), all.end());
  return all;
}

bool MarketCombo::contains(const std::string& market) const {
  return std::find(sources.begin(), sources.end(), market) != sources.end() ||
         std::find(targets.begin(), targets.end(), market) != targets.end();
}

MarketCombo make_combo(std::vector<std::string> sources,
                       std::vector<std::string> targets) {
  if (targets.empty()) fail(Status::InvalidArgument, "combo without target market");
  MarketCombo combo;
  combo.sources = std::move(sources);
  combo.targets = std::move(targets);
  std::sort(combo.sources.begin(), combo.sources.end());
  std::sort(combo.targets.begin(), combo.targets.end());
  for (const auto& m : combo.members()) {
    if (!combo.id.empty()) combo.id += '-';
    combo.id += m;
  }
  return combo;
}

std::vector<MarketCombo> enumerate_combos(
    const std::vector<std::string>& sources,
    const std::vector<std::string>& targets) {
  std::vector<MarketCombo> combos;
  const size_t ns = sources.size();
  const size_t nt = targets.size();
  for (uint64_t smask = 0; smask < (1ull << ns); ++smask) {
    for (uint64_t tmask = 1; tmask < (1ull << nt); ++tmask) {
      std::vector<std::string> s, t;
      for (size_t i = 0; i < ns; ++i)
        if (smask >> i & 1) s.push_back(sources[i]);
      for (size_t i = 0; i < nt; ++i)
        if (tmask >> i & 1) t.push_back(targets[i]);
      combos.push_back(make_combo(std::move(s), std::move(t)));
    }
  }
  std::sort(combos.begin(), combos.end(),
            [](const MarketCombo& a, const MarketCombo& b) { return a.id < b.id; });
  return combos;
}

FusedDataset fuse(const MarketCombo& combo,
                  const std::map<std::string, const MarketBundle*>& bundles,
                  double unit_rating_value) {
  FusedDataset fused;
  fused.combo = combo;

  IdMap user_map;
  IdMap item_map;
  std::vector<std::string> user_market;

  // (user idx, item idx) -> accumulated rating values
  struct Cell {
    int32_t user;
    int32_t item;
    double sum;
    int32_t count;
  };
  std::vector<Cell> cells;

  auto add_market_store = [&](const InteractionStore& store,
                              const std::string& market, bool substitute) {
    for (int32_t u = 0; u < store.n_users(); ++u) {
      const auto& token = store.user_map.token(u);
      int32_t gu;
      if (auto existing = user_map.find(token)) {
        gu = *existing;
        if (user_market[gu] != market)
          fail(Status::Parse, "user token " + token + " appears in markets " +
                                  user_market[gu] + " and " + market);
      } else {
        gu = user_map.add_or_get(token);
        user_market.push_back(market);
      }
      const auto items = store.by_user.row_indices(u);
      const auto vals = store.by_user.row_values(u);
      for (size_t k = 0; k < items.size(); ++k) {
        const int32_t gi = item_map.add_or_get(store.item_map.token(items[k]));
        cells.push_back({gu, gi, substitute ? unit_rating_value : vals[k], 1});
      }
    }
  };

  for (const auto& market : combo.members()) {
    auto it = bundles.find(market);
    if (it == bundles.end() || it->second == nullptr)
      fail(Status::MissingDependency, "no bundle for market " + market);
    add_market_store(it->second->train, market, /*substitute=*/false);
    add_market_store(it->second->train_5core, market, /*substitute=*/true);
  }

  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.item < b.item;
  });
  size_t out = 0;
  for (size_t k = 0; k < cells.size(); ++k) {
    if (out > 0 && cells[out - 1].user == cells[k].user &&
        cells[out - 1].item == cells[k].item) {
      cells[out - 1].sum += cells[k].sum;
      cells[out - 1].count += cells[k].count;
    } else {
      cells[out++] = cells[k];
    }
  }
  cells.resize(out);

  std::vector<int32_t> rows(out), cols(out);
  std::vector<double> vals(out);
  for (size_t k = 0; k < out; ++k) {
    rows[k] = cells[k].user;
    cols[k] = cells[k].item;
    vals[k] = cells[k].sum / cells[k].count;
  }
  fused.store.user_map = std::move(user_map);
  fused.store.item_map = std::move(item_map);
  fused.store.by_user = SparseMatrix::from_triplets(
      fused.store.user_map.size(), fused.store.item_map.size(), rows, cols, vals);
  fused.store.by_item = fused.store.by_user.transposed();
  fused.user_market = std::move(user_market);
  return fused;
}

}  // namespace crossrank
