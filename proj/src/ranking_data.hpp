#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace crossrank {

inline constexpr float kMissingValue = std::numeric_limits<float>::quiet_NaN();

// Grouped learning-to-rank samples: one row per (user, candidate), groups are
// slates, labels are binary relevance. NaN feature values mean missing.
struct RankingDataset {
  int32_t n_features = 0;
  std::vector<float> features;  // row-major
  std::vector<uint8_t> labels;
  std::vector<int64_t> group_offsets{0};

  int64_t n_rows() const { return static_cast<int64_t>(labels.size()); }
  int64_t n_groups() const {
    return static_cast<int64_t>(group_offsets.size()) - 1;
  }
  int64_t group_size(int64_t g) const {
    return group_offsets[g + 1] - group_offsets[g];
  }
  const float* row(int64_t r) const {
    return features.data() + static_cast<size_t>(r) * n_features;
  }
  float at(int64_t r, int32_t f) const { return row(r)[f]; }

  void start_group() { group_offsets.push_back(group_offsets.back()); }

  void add_row(std::span<const float> values, uint8_t label) {
    features.insert(features.end(), values.begin(), values.end());
    labels.push_back(label);
    group_offsets.back()++;
  }
};

// Copies the listed groups (in the given order) into a new dataset. When
// row_map is non-null it receives, per new row, the source row index.
RankingDataset subset_groups(const RankingDataset& data,
                             std::span<const int32_t> groups,
                             std::vector<int64_t>* row_map = nullptr);

}  // namespace crossrank
