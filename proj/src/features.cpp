#include "features.hpp"

#include <cmath>

#include "common.hpp"
#include "linear_ensemble.hpp"
#include "status.hpp"

namespace crossrank {

const char* variant_name(NormVariant v) {
  switch (v) {
    case NormVariant::None: return "none";
    case NormVariant::MinMax: return "minmax";
    case NormVariant::Both: return "both";
  }
  return "?";
}

NormVariant variant_from_name(const std::string& name) {
  if (name == "none") return NormVariant::None;
  if (name == "minmax") return NormVariant::MinMax;
  if (name == "both") return NormVariant::Both;
  fail(Status::Config, "unknown normalization variant '" + name + "'");
}

uint64_t FeatureSpec::schema_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& name : names) {
    h = fnv1a64(name, h);
    h = fnv1a64("\x1f", h);
  }
  return h;
}

FeatureTableBuilder::FeatureTableBuilder(const std::vector<CandidateSlate>& slates)
    : slates_(slates), n_rows_(0) {
  for (const auto& slate : slates_)
    n_rows_ += static_cast<int64_t>(slate.candidates.size());
}

void FeatureTableBuilder::add_column(const std::string& name,
                                     std::span<const float> values) {
  if (static_cast<int64_t>(values.size()) != n_rows_)
    fail(Status::InvalidArgument, "feature column " + name + ": row count mismatch");
  names_.push_back(name);
  columns_.emplace_back(values.begin(), values.end());
}

void FeatureTableBuilder::add_column(const std::string& name,
                                     std::span<const double> values) {
  if (static_cast<int64_t>(values.size()) != n_rows_)
    fail(Status::InvalidArgument, "feature column " + name + ": row count mismatch");
  names_.push_back(name);
  std::vector<float> column(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    column[i] = static_cast<float>(values[i]);
  columns_.push_back(std::move(column));
}

FeatureTable FeatureTableBuilder::build() const {
  FeatureTable table;
  table.spec.names = names_;
  table.data.n_features = static_cast<int32_t>(names_.size());
  table.data.features.resize(static_cast<size_t>(n_rows_) * names_.size());
  int64_t row = 0;
  for (const auto& slate : slates_) {
    table.data.start_group();
    for (const auto& candidate : slate.candidates) {
      const uint8_t label =
          slate.positive && candidate == *slate.positive ? 1 : 0;
      table.data.labels.push_back(label);
      table.data.group_offsets.back()++;
      for (size_t c = 0; c < columns_.size(); ++c)
        table.data.features[static_cast<size_t>(row) * names_.size() + c] =
            columns_[c][row];
      ++row;
    }
  }
  return table;
}

FeatureTable assemble_features(const std::vector<CandidateSlate>& slates,
                               const ScoreTable& rec_scores,
                               const InteractionStore& store,
                               const FactorModel& factors,
                               NormVariant variant) {
  if (rec_scores.n_slates() != static_cast<int64_t>(slates.size()))
    fail(Status::InvalidArgument, "assemble_features: slate count mismatch");
  FeatureTableBuilder builder(slates);
  if (builder.n_rows() != rec_scores.n_rows())
    fail(Status::InvalidArgument, "assemble_features: row count mismatch");
  const int64_t n_rows = builder.n_rows();

  auto rec_column = [&](const ScoreTable& table, size_t unit) {
    std::vector<double> column(n_rows);
    for (int64_t r = 0; r < n_rows; ++r) column[r] = table.at(r, unit);
    return column;
  };
  if (variant == NormVariant::None || variant == NormVariant::Both) {
    for (size_t u = 0; u < rec_scores.units.size(); ++u)
      builder.add_column("rec:" + rec_scores.units[u] + ":raw",
                         rec_column(rec_scores, u));
  }
  if (variant == NormVariant::MinMax || variant == NormVariant::Both) {
    const ScoreTable normalized = normalize_minmax_userwise(rec_scores);
    for (size_t u = 0; u < normalized.units.size(); ++u)
      builder.add_column("rec:" + normalized.units[u] + ":norm",
                         rec_column(normalized, u));
  }

  // user and item statistics within this dataset
  std::vector<float> user_len(n_rows), user_mean(n_rows), item_pop(n_rows),
      item_mean(n_rows);
  std::vector<int32_t> user_idx(slates.size());
  {
    int64_t row = 0;
    for (size_t s = 0; s < slates.size(); ++s) {
      const auto u = store.user_map.find(slates[s].user);
      if (!u)
        fail(Status::InvalidArgument,
             "assemble_features: user " + slates[s].user + " not in store");
      user_idx[s] = *u;
      const auto len = static_cast<float>(store.profile_length(*u));
      const auto mean = static_cast<float>(store.user_mean_rating(*u));
      for (const auto& candidate : slates[s].candidates) {
        user_len[row] = len;
        user_mean[row] = mean;
        const auto i = store.item_map.find(candidate);
        if (i) {
          item_pop[row] = static_cast<float>(store.item_popularity(*i));
          item_mean[row] = static_cast<float>(store.item_mean_rating(*i));
        } else {
          item_pop[row] = 0.0f;
          item_mean[row] = kMissingValue;
        }
        ++row;
      }
    }
  }
  builder.add_column("user:profile_len", user_len);
  builder.add_column("user:mean_rating", user_mean);
  builder.add_column("item:pop", item_pop);
  builder.add_column("item:mean_rating", item_mean);

  const auto n_users = static_cast<float>(store.n_users());
  const auto n_items = static_cast<float>(store.n_items());
  const float density =
      n_users > 0 && n_items > 0
          ? static_cast<float>(store.n_entries()) / (n_users * n_items)
          : 0.0f;
  std::vector<float> constant(n_rows);
  auto add_constant = [&](const std::string& name, float value) {
    std::fill(constant.begin(), constant.end(), value);
    builder.add_column(name, constant);
  };
  add_constant("ds:n_users", n_users);
  add_constant("ds:n_items", n_items);
  add_constant("ds:density", density);

  // L2-normalized latent factors; missing for entities outside the store.
  const auto& ufac = factors.user_factors();
  const auto& ifac = factors.item_factors();
  const auto dim = static_cast<int32_t>(ufac.cols());
  std::vector<float> factor_col(n_rows);
  for (int32_t d = 0; d < dim; ++d) {
    int64_t row = 0;
    for (size_t s = 0; s < slates.size(); ++s) {
      const auto u = user_idx[s];
      const double norm = ufac.row(u).norm();
      const float value =
          norm > 0 ? static_cast<float>(ufac(u, d) / norm) : kMissingValue;
      for (size_t c = 0; c < slates[s].candidates.size(); ++c)
        factor_col[row++] = value;
    }
    char name[16];
    std::snprintf(name, sizeof(name), "uf:%02d", d);
    builder.add_column(name, factor_col);
  }
  for (int32_t d = 0; d < dim; ++d) {
    int64_t row = 0;
    for (const auto& slate : slates) {
      for (const auto& candidate : slate.candidates) {
        const auto i = store.item_map.find(candidate);
        if (i && *i < ifac.rows()) {
          const double norm = ifac.row(*i).norm();
          factor_col[row] =
              norm > 0 ? static_cast<float>(ifac(*i, d) / norm) : kMissingValue;
        } else {
          factor_col[row] = kMissingValue;
        }
        ++row;
      }
    }
    char name[16];
    std::snprintf(name, sizeof(name), "if:%02d", d);
    builder.add_column(name, factor_col);
  }
  return builder.build();
}

}  // namespace crossrank
