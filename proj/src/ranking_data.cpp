#include "ranking_data.hpp"

#include "status.hpp"

namespace crossrank {

RankingDataset subset_groups(const RankingDataset& data,
                             std::span<const int32_t> groups,
                             std::vector<int64_t>* row_map) {
  RankingDataset out;
  out.n_features = data.n_features;
  if (row_map) row_map->clear();
  for (int32_t g : groups) {
    if (g < 0 || g >= data.n_groups())
      fail(Status::InvalidArgument, "subset_groups: bad group index");
    out.start_group();
    for (int64_t r = data.group_offsets[g]; r < data.group_offsets[g + 1]; ++r) {
      out.add_row({data.row(r), static_cast<size_t>(data.n_features)},
                  data.labels[r]);
      if (row_map) row_map->push_back(r);
    }
  }
  return out;
}

}  // namespace crossrank
