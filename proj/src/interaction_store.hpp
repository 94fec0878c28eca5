#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sparse.hpp"

namespace crossrank {

// Bijective token <-> dense index map; indices contiguous from 0 in
// insertion order. Tokens are opaque and kept verbatim.
class IdMap {
 public:
  int32_t add_or_get(std::string_view token);
  std::optional<int32_t> find(std::string_view token) const;
  const std::string& token(int32_t index) const { return backward_[index]; }
  int32_t size() const { return static_cast<int32_t>(backward_.size()); }
  const std::vector<std::string>& tokens() const { return backward_; }
  uint64_t content_hash() const;

 private:
  std::unordered_map<std::string, int32_t> forward_;
  std::vector<std::string> backward_;
};

struct RatingTriple {
  std::string user;
  std::string item;
  double rating = 0;
};

// Deduplicated sparse user-item rating matrix with bidirectional id maps.
// by_item is the transpose of by_user, kept for column access.
struct InteractionStore {
  IdMap user_map;
  IdMap item_map;
  SparseMatrix by_user;  // users x items
  SparseMatrix by_item;  // items x users

  int32_t n_users() const { return by_user.rows; }
  int32_t n_items() const { return by_user.cols; }
  int64_t n_entries() const { return by_user.nnz(); }
  int64_t profile_length(int32_t user) const { return by_user.row_nnz(user); }
  double user_mean_rating(int32_t user) const;
  double item_mean_rating(int32_t item) const;
  int64_t item_popularity(int32_t item) const { return by_item.row_nnz(item); }
  uint64_t content_hash() const;
};

struct BuildStoreOptions {
  bool extend_users = true;
  bool extend_items = true;
};

// Collapses duplicate (user, item) pairs by arithmetic mean of their ratings.
// Fresh maps assign dense indices in first-appearance order.
InteractionStore build_store(std::span<const RatingTriple> triples,
                             IdMap user_map = {}, IdMap item_map = {},
                             BuildStoreOptions options = {});

}  // namespace crossrank
