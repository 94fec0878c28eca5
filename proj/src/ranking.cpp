#include "ranking.hpp"

#include <algorithm>
#include <numeric>

#include "status.hpp"

namespace crossrank {

std::vector<int32_t> rank_order(std::span<const double> primary,
                                std::span<const double> secondary,
                                std::span<const std::string> tokens) {
  if (!secondary.empty() && secondary.size() != primary.size())
    fail(Status::InvalidArgument, "rank_order: secondary size mismatch");
  if (tokens.size() != primary.size())
    fail(Status::InvalidArgument, "rank_order: token size mismatch");
  std::vector<int32_t> order(primary.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    if (primary[a] != primary[b]) return primary[a] > primary[b];
    if (!secondary.empty() && secondary[a] != secondary[b])
      return secondary[a] > secondary[b];
    return tokens[a] < tokens[b];
  });
  return order;
}

std::vector<int32_t> rank_order_by_index(std::span<const double> scores) {
  std::vector<int32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace crossrank
