#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "interaction_store.hpp"

namespace crossrank {

// One user plus an ordered candidate list; the positive, when known, is one
// of the candidates.
struct CandidateSlate {
  std::string user;
  std::vector<std::string> candidates;
  std::optional<std::string> positive;
};

// A slate with per-candidate scores. `tie_score` is the secondary sort key;
// empty means no secondary key.
struct ScoredSlate {
  std::string user;
  std::vector<std::string> items;
  std::vector<double> score;
  std::vector<double> tie_score;
};

// Parses a TSV ratings file. With has_rating_column=false every line is
// (user, item) and the rating is emitted as 1.0. A first line whose rating
// column is non-numeric is treated as a header; repeated copies of that
// header are skipped.
std::vector<RatingTriple> parse_ratings(const std::filesystem::path& path,
                                        bool has_rating_column);

// Parses "user<TAB>item1,item2,..." slate lines. Every slate must have
// exactly `slate_size` distinct candidates; users must be unique.
std::vector<CandidateSlate> parse_run(const std::filesystem::path& path,
                                      int slate_size = 100);

// Parses "user<TAB>item<TAB>1" lines; exactly one positive per user.
std::unordered_map<std::string, std::string> parse_qrels(
    const std::filesystem::path& path);

// Writes "user<TAB>item<TAB>rank<TAB>score" lines, candidates ordered by the
// full tie-broken ordering (score desc, tie_score desc, token asc). Output is
// byte-deterministic for identical input. Fails before writing anything if a
// score is non-finite.
void write_submission(std::span<const ScoredSlate> slates,
                      const std::filesystem::path& path);

struct MarketBundle {
  std::string market_id;
  InteractionStore train;        // raw ratings
  InteractionStore train_5core;  // preprocessed; all ratings 1.0
  std::vector<CandidateSlate> valid_slates;  // positive filled from qrels
  std::vector<CandidateSlate> test_slates;   // no positives
  std::unordered_map<std::string, std::string> valid_qrels;
  uint64_t input_hash = 0;  // over the five input files
};

// Loads train.tsv, train_5core.tsv, valid_run.tsv, valid_qrel.tsv and
// test_run.tsv from `dir` and validates the bundle invariants.
MarketBundle load_market_bundle(const std::filesystem::path& dir,
                                const std::string& market_id,
                                int slate_size = 100);

}  // namespace crossrank
