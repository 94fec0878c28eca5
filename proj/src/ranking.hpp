#pragma once

#include <span>
#include <string>
#include <vector>

namespace crossrank {

// Total candidate ordering used everywhere a slate is turned into a ranking:
// primary score descending, then secondary score descending, then item token
// ascending. Returns candidate positions, best first. `secondary` may be
// empty (treated as all-equal).
std::vector<int32_t> rank_order(std::span<const double> primary,
                                std::span<const double> secondary,
                                std::span<const std::string> tokens);

// Rank positions without tokens: ties fall back to candidate index ascending.
std::vector<int32_t> rank_order_by_index(std::span<const double> scores);

}  // namespace crossrank
