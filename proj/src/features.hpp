#pragma once

#include <string>
#include <vector>

#include "interaction_store.hpp"
#include "market_io.hpp"
#include "ranking_data.hpp"
#include "recommenders.hpp"
#include "score_table.hpp"

namespace crossrank {

enum class NormVariant { None, MinMax, Both };

const char* variant_name(NormVariant v);
NormVariant variant_from_name(const std::string& name);

// Ordered feature column names; the hash pins train/test schema equality.
struct FeatureSpec {
  std::vector<std::string> names;
  uint64_t schema_hash() const;
};

struct FeatureTable {
  FeatureSpec spec;
  RankingDataset data;
};

// Incremental column-oriented assembly over a fixed slate list.
class FeatureTableBuilder {
 public:
  explicit FeatureTableBuilder(const std::vector<CandidateSlate>& slates);

  // `values` has one entry per (slate, candidate) row, slate-major.
  void add_column(const std::string& name, std::span<const float> values);
  void add_column(const std::string& name, std::span<const double> values);

  int64_t n_rows() const { return n_rows_; }
  // Labels come from slate positives; slates without a positive get all-zero
  // labels.
  FeatureTable build() const;

 private:
  const std::vector<CandidateSlate>& slates_;
  int64_t n_rows_;
  std::vector<std::string> names_;
  std::vector<std::vector<float>> columns_;
};

// One sample per (user, candidate): recommender scores under the chosen
// normalization variant, user/item/dataset statistics and L2-normalized
// latent factors. Cold items get popularity 0 and missing-valued factors.
FeatureTable assemble_features(const std::vector<CandidateSlate>& slates,
                               const ScoreTable& rec_scores,
                               const InteractionStore& store,
                               const FactorModel& factors,
                               NormVariant variant);

}  // namespace crossrank
