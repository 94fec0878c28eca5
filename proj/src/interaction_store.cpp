#include "interaction_store.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

int32_t IdMap::add_or_get(std::string_view token) {
  auto it = forward_.find(std::string(token));
  if (it != forward_.end()) return it->second;
  const int32_t index = static_cast<int32_t>(backward_.size());
  backward_.emplace_back(token);
  forward_.emplace(backward_.back(), index);
  return index;
}

std::optional<int32_t> IdMap::find(std::string_view token) const {
  auto it = forward_.find(std::string(token));
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

uint64_t IdMap::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : backward_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\x1f", h);
  }
  return h;
}

double InteractionStore::user_mean_rating(int32_t user) const {
  const int64_t n = by_user.row_nnz(user);
  return n == 0 ? 0.0 : by_user.row_sum(user) / static_cast<double>(n);
}

double InteractionStore::item_mean_rating(int32_t item) const {
  const int64_t n = by_item.row_nnz(item);
  return n == 0 ? 0.0 : by_item.row_sum(item) / static_cast<double>(n);
}

uint64_t InteractionStore::content_hash() const {
  uint64_t h = user_map.content_hash();
  h = fnv1a64("|", h);
  const uint64_t ih = item_map.content_hash();
  h = fnv1a64(&ih, sizeof(ih), h);
  const uint64_t mh = by_user.content_hash();
  h = fnv1a64(&mh, sizeof(mh), h);
  return h;
}

InteractionStore build_store(std::span<const RatingTriple> triples,
                             IdMap user_map, IdMap item_map,
                             BuildStoreOptions options) {
  InteractionStore store;
  store.user_map = std::move(user_map);
  store.item_map = std::move(item_map);

  struct Cell {
    int32_t user;
    int32_t item;
    double sum;
    int64_t count;
  };
  std::vector<Cell> cells;
  cells.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.user.empty() || t.item.empty())
      fail(Status::InvalidArgument, "build_store: empty token");
    if (!std::isfinite(t.rating))
      fail(Status::InvalidArgument, "build_store: non-finite rating");
    int32_t u;
    if (options.extend_users) {
      u = store.user_map.add_or_get(t.user);
    } else {
      auto found = store.user_map.find(t.user);
      if (!found) fail(Status::InvalidArgument, "build_store: unknown user " + t.user);
      u = *found;
    }
    int32_t i;
    if (options.extend_items) {
      i = store.item_map.add_or_get(t.item);
    } else {
      auto found = store.item_map.find(t.item);
      if (!found) fail(Status::InvalidArgument, "build_store: unknown item " + t.item);
      i = *found;
    }
    cells.push_back({u, i, t.rating, 1});
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
    vals[k] = cells[k].sum / static_cast<double>(cells[k].count);
  }
  store.by_user = SparseMatrix::from_triplets(store.user_map.size(),
                                              store.item_map.size(), rows,
                                              cols, vals);
  store.by_item = store.by_user.transposed();
  return store;
}

}  // namespace crossrank
