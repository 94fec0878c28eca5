#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crossrank {

// Per-candidate scores for a list of slates, one column per scoring unit
// (a recommender at stage 2, a dataset at the last level). Rows follow slate
// order; slate s covers rows [offsets[s], offsets[s+1]).
struct ScoreTable {
  std::vector<std::string> units;
  std::vector<int64_t> offsets{0};
  std::vector<double> values;  // row-major [row * units.size() + unit]

  int64_t n_rows() const { return offsets.back(); }
  int64_t n_slates() const { return static_cast<int64_t>(offsets.size()) - 1; }
  size_t n_units() const { return units.size(); }

  double at(int64_t row, size_t unit) const {
    return values[static_cast<size_t>(row) * units.size() + unit];
  }
  double& at(int64_t row, size_t unit) {
    return values[static_cast<size_t>(row) * units.size() + unit];
  }

  void add_slate(int64_t n_candidates) {
    offsets.push_back(offsets.back() + n_candidates);
    values.resize(static_cast<size_t>(offsets.back()) * units.size(), 0.0);
  }

  int64_t unit_index(const std::string& name) const;
};

}  // namespace crossrank
