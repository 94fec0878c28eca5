#include "runner.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "boosted_ranker.hpp"
#include "common.hpp"
#include "cross_validation.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "lambdarank.hpp"
#include "linear_ensemble.hpp"
#include "recommenders.hpp"
#include "status.hpp"
#include "synthetic.hpp"

namespace crossrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVariants[] = {"none", "minmax", "both"};

// ---- small cache helpers ----

bool meta_matches(const fs::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) return false;
  try {
    json j;
    in >> j;
    return j.value("key", std::string()) == key;
  } catch (...) {
    return false;
  }
}

void write_meta(const fs::path& path, const std::string& key, json extra = {}) {
  json j = std::move(extra);
  j["key"] = key;
  atomic_write_file(path, j.dump(2) + "\n");
}

// Score tables: "#schema <hash> user item <column>" then one row per
// (user, candidate) in slate order.
void write_score_column(const fs::path& path,
                        const std::vector<CandidateSlate>& slates,
                        std::span<const double> values,
                        const std::string& column) {
  const std::string header = "user\titem\t" + column;
  std::string out = "#schema " + hash_hex(fnv1a64(header)) + " " + header + "\n";
  size_t row = 0;
  for (const auto& slate : slates) {
    for (const auto& candidate : slate.candidates) {
      out += slate.user;
      out += '\t';
      out += candidate;
      out += '\t';
      out += format_double(values[row++]);
      out += '\n';
    }
  }
  if (row != values.size())
    fail(Status::Internal, "score column row mismatch for " + path.string());
  atomic_write_file(path, out);
}

std::vector<double> read_score_column(const fs::path& path,
                                      const std::vector<CandidateSlate>& slates,
                                      const std::string& column) {
  std::ifstream in(path);
  if (!in)
    fail(Status::MissingDependency, "missing score table " + path.string());
  std::string line;
  if (!std::getline(in, line))
    fail(Status::Parse, "empty score table " + path.string());
  const std::string header = "user\titem\t" + column;
  const std::string want = "#schema " + hash_hex(fnv1a64(header)) + " " + header;
  if (std::string(strip_cr(line)) != want)
    fail(Status::Parse, "schema mismatch in " + path.string());
  std::vector<double> values;
  for (const auto& slate : slates) {
    for (const auto& candidate : slate.candidates) {
      if (!std::getline(in, line))
        fail(Status::Parse, "truncated score table " + path.string());
      const auto cols = split(strip_cr(line), '\t');
      if (cols.size() != 3 || cols[0] != slate.user || cols[1] != candidate)
        fail(Status::Parse, "row mismatch in " + path.string() + " for user " +
                                slate.user);
      double v;
      if (!parse_double(cols[2], &v))
        fail(Status::Parse, "bad score in " + path.string());
      values.push_back(v);
    }
  }
  return values;
}

void write_fused_cache(const fs::path& dir, const FusedDataset& fused,
                       const std::string& key) {
  std::string users;
  for (int32_t u = 0; u < fused.store.n_users(); ++u)
    users += fused.store.user_map.token(u) + "\t" + fused.user_market[u] + "\n";
  atomic_write_file(dir / "users.tsv", users);
  std::string items;
  for (int32_t i = 0; i < fused.store.n_items(); ++i)
    items += fused.store.item_map.token(i) + "\n";
  atomic_write_file(dir / "items.tsv", items);
  std::string store;
  for (int32_t u = 0; u < fused.store.n_users(); ++u) {
    const auto idx = fused.store.by_user.row_indices(u);
    const auto val = fused.store.by_user.row_values(u);
    for (size_t k = 0; k < idx.size(); ++k) {
      store += fused.store.user_map.token(u) + "\t" +
               fused.store.item_map.token(idx[k]) + "\t" +
               format_double(val[k]) + "\n";
    }
  }
  atomic_write_file(dir / "store.tsv", store);
  json extra;
  extra["combo"] = fused.combo.id;
  extra["n_users"] = fused.store.n_users();
  extra["n_items"] = fused.store.n_items();
  extra["n_entries"] = fused.store.n_entries();
  extra["store_hash"] = hash_hex(fused.store.content_hash());
  write_meta(dir / "meta.json", key, std::move(extra));
}

FusedDataset read_fused_cache(const fs::path& dir, const MarketCombo& combo) {
  FusedDataset fused;
  fused.combo = combo;
  {
    std::ifstream in(dir / "users.tsv");
    if (!in) fail(Status::MissingDependency, "missing " + (dir / "users.tsv").string());
    std::string line;
    while (std::getline(in, line)) {
      const auto sv = strip_cr(line);
      if (sv.empty()) continue;
      const auto cols = split(sv, '\t');
      if (cols.size() != 2) fail(Status::Parse, "bad fused user line");
      fused.store.user_map.add_or_get(cols[0]);
      fused.user_market.emplace_back(cols[1]);
    }
  }
  {
    std::ifstream in(dir / "items.tsv");
    if (!in) fail(Status::MissingDependency, "missing " + (dir / "items.tsv").string());
    std::string line;
    while (std::getline(in, line)) {
      const auto sv = strip_cr(line);
      if (!sv.empty()) fused.store.item_map.add_or_get(sv);
    }
  }
  const auto triples = parse_ratings(dir / "store.tsv", true);
  auto store = build_store(triples, std::move(fused.store.user_map),
                           std::move(fused.store.item_map),
                           {.extend_users = false, .extend_items = false});
  fused.store = std::move(store);
  return fused;
}

std::vector<int64_t> slate_profile_lengths(
    const InteractionStore& store, const std::vector<CandidateSlate>& slates) {
  std::vector<int64_t> lengths;
  lengths.reserve(slates.size());
  for (const auto& slate : slates) {
    const auto u = store.user_map.find(slate.user);
    if (!u)
      fail(Status::InvalidArgument,
           "user " + slate.user + " missing from fused store");
    lengths.push_back(store.profile_length(*u));
  }
  return lengths;
}

std::unordered_map<std::string, int64_t> user_length_map(
    const InteractionStore& store, const std::vector<CandidateSlate>& slates) {
  std::unordered_map<std::string, int64_t> out;
  for (const auto& slate : slates) {
    const auto u = store.user_map.find(slate.user);
    if (!u)
      fail(Status::InvalidArgument,
           "user " + slate.user + " missing from fused store");
    out[slate.user] = store.profile_length(*u);
  }
  return out;
}

double slates_mean_ndcg(const std::vector<CandidateSlate>& slates,
                        std::span<const double> scores, int k = 10) {
  double total = 0;
  size_t row = 0;
  for (const auto& slate : slates) {
    std::span<const double> s(scores.data() + row, slate.candidates.size());
    row += slate.candidates.size();
    const auto order = rank_order(s, {}, slate.candidates);
    int64_t rank = -1;
    for (size_t r = 0; r < order.size(); ++r) {
      if (slate.candidates[order[r]] == *slate.positive) {
        rank = static_cast<int64_t>(r) + 1;
        break;
      }
    }
    total += ndcg_from_rank(rank, k);
  }
  return slates.empty() ? 0.0 : total / static_cast<double>(slates.size());
}

SearchSpace ranker_search_space() {
  SearchSpace space;
  space.log_real("learning_rate", 0.02, 0.3)
      .integer("max_leaves", 7, 63)
      .log_integer("min_samples_leaf", 5, 200)
      .real("feature_subsample", 0.6, 1.0)
      .real("row_subsample", 0.6, 1.0)
      .log_real("l2_leaf_reg", 1e-3, 10.0);
  return space;
}

RankerHyperParams ranker_hp_from_config(const TrialConfig& config,
                                        int64_t n_trees, int64_t patience) {
  RankerHyperParams hp;
  hp.n_trees = n_trees;
  hp.early_stopping_patience = patience;
  hp.learning_rate = get_real(config, "learning_rate");
  hp.max_leaves = get_int(config, "max_leaves");
  hp.min_samples_leaf = get_int(config, "min_samples_leaf");
  hp.feature_subsample = get_real(config, "feature_subsample");
  hp.row_subsample = get_real(config, "row_subsample");
  hp.l2_leaf_reg = get_real(config, "l2_leaf_reg");
  return hp;
}

class RankerCvModel : public CvModel {
 public:
  RankerCvModel(const RankingDataset& train, const RankingDataset& holdout,
                const RankerHyperParams& hp, uint64_t seed)
      : ranker_(fit_ranker(train, holdout, hp, seed)) {}
  std::vector<double> predict(const RankingDataset& data) const override {
    return crossrank::predict(ranker_, data);
  }
  const BoostedRanker& ranker() const { return ranker_; }

 private:
  BoostedRanker ranker_;
};

struct OracleFactors {
  std::unordered_map<std::string, std::vector<double>> users;
  std::unordered_map<std::string, std::vector<double>> items;
  int dim = 0;
};

void load_factor_file(const fs::path& path,
                      std::unordered_map<std::string, std::vector<double>>* out,
                      int* dim) {
  std::ifstream in(path);
  if (!in)
    fail(Status::MissingDependency, "missing oracle factor file " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto sv = strip_cr(line);
    if (sv.empty()) continue;
    const auto cols = split(sv, '\t');
    if (cols.size() < 2) fail(Status::Parse, "bad factor line in " + path.string());
    std::vector<double> values;
    for (size_t c = 1; c < cols.size(); ++c) {
      double v;
      if (!parse_double(cols[c], &v))
        fail(Status::Parse, "bad factor value in " + path.string());
      values.push_back(v);
    }
    if (*dim == 0) *dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != *dim)
      fail(Status::Parse, "inconsistent factor width in " + path.string());
    (*out)[std::string(cols[0])] = std::move(values);
  }
}

}  // namespace

// ---- context ----

struct PipelineRunner::StageContext {
  std::map<std::string, MarketBundle> bundles;
  std::map<std::string, FusedDataset> fused;
  std::mutex fused_mutex;
  std::optional<OracleFactors> oracle;
  std::mutex oracle_mutex;
  std::mutex journal_mutex;
};

PipelineRunner::PipelineRunner(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  filter_terms_ = cfg_.combo_filter;
}

void PipelineRunner::set_jobs(int jobs) {
  if (jobs < 1) fail(Status::InvalidArgument, "jobs must be >= 1");
  cfg_.jobs = jobs;
}

void PipelineRunner::set_seed_override(uint64_t seed) {
  cfg_.seed = seed;
  cfg_.cv_seeds.clear();
  for (uint64_t i = 0; i < 3; ++i)
    cfg_.cv_seeds.push_back(mix_seed(seed, 0xcf0 + i));
}

void PipelineRunner::set_combo_filter(const std::string& expr) {
  filter_terms_.clear();
  for (const auto& term : split(expr, ','))
    if (!term.empty()) filter_terms_.emplace_back(term);
}

void PipelineRunner::set_cache_dir(const fs::path& dir) {
  cfg_.cache_dir = dir;
}

void PipelineRunner::journal(const std::string& artifact,
                             const std::string& status, int64_t wall_ms,
                             std::optional<double> objective) {
  auto& ctx = context();
  std::lock_guard<std::mutex> lock(ctx.journal_mutex);
  fs::create_directories(cfg_.cache_dir);
  std::ofstream out(cfg_.cache_dir / "journal.tsv", std::ios::app);
  out << artifact << '\t' << status << '\t' << wall_ms << '\t'
      << (objective ? format_double(*objective) : "-") << '\t' << now_ms()
      << '\n';
}

PipelineRunner::StageContext& PipelineRunner::context() {
  if (!ctx_) {
    ctx_ = std::make_unique<StageContext>();
    std::vector<std::string> markets = cfg_.source_markets;
    markets.insert(markets.end(), cfg_.target_markets.begin(),
                   cfg_.target_markets.end());
    for (const auto& market : markets) {
      ctx_->bundles.emplace(
          market, load_market_bundle(cfg_.data_root / market, market,
                                     cfg_.slate_size));
    }
  }
  return *ctx_;
}

std::vector<MarketCombo> PipelineRunner::active_combos() const {
  auto combos = enumerate_combos(cfg_.source_markets, cfg_.target_markets);
  if (filter_terms_.empty()) return combos;
  std::vector<MarketCombo> selected;
  for (const auto& combo : combos) {
    for (const auto& term : filter_terms_) {
      bool match = false;
      if (term.rfind("id:", 0) == 0)
        match = combo.id == term.substr(3);
      else if (term.find('-') != std::string::npos)
        match = combo.id == term;
      else
        match = combo.contains(term);
      if (match) {
        selected.push_back(combo);
        break;
      }
    }
  }
  return selected;
}

// ---- stages ----

void PipelineRunner::run_synth() {
  const int64_t t0 = now_ms();
  write_synthetic_world(cfg_.synth, cfg_.data_root);
  journal("synth", "computed", now_ms() - t0, std::nullopt);
}

namespace {

// combos needed on disk: the filtered set plus each target-alone dataset
// (stage 3 draws target-market statistics and factors from the latter)
std::vector<MarketCombo> combos_to_prepare(
    const std::vector<MarketCombo>& active,
    const std::vector<std::string>& targets) {
  std::vector<MarketCombo> all = active;
  for (const auto& target : targets) {
    const auto combo = make_combo({}, {target});
    if (std::none_of(all.begin(), all.end(),
                     [&](const MarketCombo& c) { return c.id == combo.id; }))
      all.push_back(combo);
  }
  std::sort(all.begin(), all.end(),
            [](const MarketCombo& a, const MarketCombo& b) { return a.id < b.id; });
  return all;
}

}  // namespace

void PipelineRunner::run_prepare() {
  auto& ctx = context();
  const auto combos = combos_to_prepare(active_combos(), cfg_.target_markets);
  parallel_for(0, static_cast<int64_t>(combos.size()), cfg_.jobs, [&](int64_t i) {
    const auto& combo = combos[i];
    const int64_t t0 = now_ms();
    const fs::path dir = cfg_.cache_dir / "fused" / combo.id;
    uint64_t h = fnv1a64("fused|" + combo.id + "|" +
                         format_double(cfg_.unit_rating_value));
    std::map<std::string, const MarketBundle*> bundles;
    for (const auto& market : combo.members()) {
      auto it = ctx.bundles.find(market);
      if (it == ctx.bundles.end())
        fail(Status::MissingDependency, "market " + market + " not configured");
      bundles[market] = &it->second;
      h = fnv1a64(&it->second.input_hash, sizeof(uint64_t), h);
    }
    const std::string key = hash_hex(h);
    if (meta_matches(dir / "meta.json", key)) {
      journal("fused/" + combo.id, "hit", now_ms() - t0, std::nullopt);
      return;
    }
    const FusedDataset fused = fuse(combo, bundles, cfg_.unit_rating_value);
    write_fused_cache(dir, fused, key);
    journal("fused/" + combo.id, "computed", now_ms() - t0, std::nullopt);
  });
}

namespace {

std::string fused_key_of(const fs::path& cache_dir, const MarketCombo& combo) {
  const fs::path meta = cache_dir / "fused" / combo.id / "meta.json";
  std::ifstream in(meta);
  if (!in)
    fail(Status::MissingDependency,
         "fused dataset " + combo.id + " not prepared (run prepare)");
  json j;
  try {
    in >> j;
  } catch (...) {
    fail(Status::Parse, "bad fused meta " + meta.string());
  }
  return j.value("key", std::string());
}

}  // namespace

const FusedDataset& runner_load_fused(PipelineRunner::StageContext& ctx,
                                      const fs::path& cache_dir,
                                      const MarketCombo& combo);

const FusedDataset& runner_load_fused(PipelineRunner::StageContext& ctx,
                                      const fs::path& cache_dir,
                                      const MarketCombo& combo) {
  std::lock_guard<std::mutex> lock(ctx.fused_mutex);
  auto it = ctx.fused.find(combo.id);
  if (it != ctx.fused.end()) return it->second;
  auto fused = read_fused_cache(cache_dir / "fused" / combo.id, combo);
  return ctx.fused.emplace(combo.id, std::move(fused)).first->second;
}

void PipelineRunner::run_stage1() {
  auto& ctx = context();
  const auto combos = active_combos();

  struct Task {
    MarketCombo combo;
    std::string algo;
  };
  std::vector<Task> tasks;
  for (const auto& combo : combos)
    for (const auto& algo : cfg_.recommenders) tasks.push_back({combo, algo});

  parallel_for(0, static_cast<int64_t>(tasks.size()), cfg_.jobs, [&](int64_t ti) {
    const auto& [combo, algo] = tasks[ti];
    const int64_t t0 = now_ms();
    const fs::path dir = cfg_.cache_dir / "stage1" / combo.id / algo;
    const std::string artifact = "stage1/" + combo.id + "/" + algo;

    uint64_t h = fnv1a64("stage1|" + fused_key_of(cfg_.cache_dir, combo) + "|" +
                         algo + "|" + std::to_string(cfg_.budget_stage1) + "|" +
                         std::to_string(cfg_.seed));
    const std::string key = hash_hex(h);
    if (meta_matches(dir / "meta.json", key)) {
      journal(artifact, "hit", now_ms() - t0, std::nullopt);
      return;
    }

    const FusedDataset& fused =
        runner_load_fused(ctx, cfg_.cache_dir, combo);
    const InteractionStore& store = fused.store;

    // validation slates of every target market in the combo drive the tuning
    std::vector<std::string> combo_targets;
    for (const auto& t : cfg_.target_markets)
      if (combo.contains(t)) combo_targets.push_back(t);
    if (combo_targets.empty())
      fail(Status::Internal, "combo without target " + combo.id);

    auto eval_model = [&](const Recommender& model) {
      double total = 0;
      int64_t n = 0;
      for (const auto& target : combo_targets) {
        const auto& slates = ctx.bundles.at(target).valid_slates;
        std::vector<double> flat;
        for (const auto& slate : slates) {
          const auto scores = score_slate(model, store, slate.user, slate.candidates);
          flat.insert(flat.end(), scores.begin(), scores.end());
        }
        total += slates_mean_ndcg(slates, flat) * static_cast<double>(slates.size());
        n += static_cast<int64_t>(slates.size());
      }
      return n ? total / static_cast<double>(n) : 0.0;
    };

    std::unique_ptr<Recommender> model;
    double objective = 0;
    json best_config;
    const uint64_t fit_seed = mix_seed(cfg_.seed, fnv1a64(artifact));

    if (algo == "oracle") {
      {
        std::lock_guard<std::mutex> lock(ctx.oracle_mutex);
        if (!ctx.oracle) {
          OracleFactors oracle;
          load_factor_file(cfg_.data_root / "factors_items.tsv", &oracle.items,
                           &oracle.dim);
          std::vector<std::string> markets = cfg_.source_markets;
          markets.insert(markets.end(), cfg_.target_markets.begin(),
                         cfg_.target_markets.end());
          for (const auto& market : markets)
            load_factor_file(cfg_.data_root / market / "factors_users.tsv",
                             &oracle.users, &oracle.dim);
          ctx.oracle = std::move(oracle);
        }
      }
      const auto& oracle = *ctx.oracle;
      Eigen::MatrixXd u(store.n_users(), oracle.dim);
      for (int32_t r = 0; r < store.n_users(); ++r) {
        auto it = oracle.users.find(store.user_map.token(r));
        if (it == oracle.users.end())
          fail(Status::MissingDependency,
               "oracle factors missing for user " + store.user_map.token(r));
        for (int d = 0; d < oracle.dim; ++d) u(r, d) = it->second[d];
      }
      Eigen::MatrixXd v(store.n_items(), oracle.dim);
      for (int32_t r = 0; r < store.n_items(); ++r) {
        auto it = oracle.items.find(store.item_map.token(r));
        if (it == oracle.items.end())
          fail(Status::MissingDependency,
               "oracle factors missing for item " + store.item_map.token(r));
        for (int d = 0; d < oracle.dim; ++d) v(r, d) = it->second[d];
      }
      model = std::make_unique<FactorModel>(std::move(u), std::move(v));
      objective = eval_model(*model);
      best_config["algo"] = "oracle";
    } else {
      const Algo algo_tag = algo_from_name(algo);
      const SearchSpace space = default_search_space(algo_tag);
      HyperParams best_hp;
      if (space.params.empty()) {
        model = fit(algo_tag, store, best_hp, fit_seed);
        objective = eval_model(*model);
      } else {
        TrialJournal trials(dir / "trials.tsv");
        const Trial best = search(
            space,
            [&](const TrialConfig& config) -> double {
              try {
                const auto hp = hyperparams_from_config(algo_tag, config);
                const auto trial_model = fit(algo_tag, store, hp, fit_seed);
                return eval_model(*trial_model);
              } catch (const Error&) {
                return std::numeric_limits<double>::quiet_NaN();
              }
            },
            cfg_.budget_stage1, mix_seed(cfg_.seed, fnv1a64(artifact + "|search")),
            &trials);
        best_hp = hyperparams_from_config(algo_tag, best.config);
        best_config = json::parse(config_to_string(best.config));
        model = fit(algo_tag, store, best_hp, fit_seed);
        objective = best.objective;
      }
    }

    {
      std::ostringstream blob;
      model->save(blob);
      atomic_write_file(dir / "model.bin", blob.str());
    }
    for (const auto& target : combo_targets) {
      const auto& bundle = ctx.bundles.at(target);
      auto score_split = [&](const std::vector<CandidateSlate>& slates,
                             const std::string& name) {
        std::vector<double> flat;
        flat.reserve(slates.size() * cfg_.slate_size);
        for (const auto& slate : slates) {
          const auto scores =
              score_slate(*model, store, slate.user, slate.candidates);
          flat.insert(flat.end(), scores.begin(), scores.end());
        }
        write_score_column(dir / (name + "_" + target + ".tsv"), slates, flat,
                           "score:" + combo.id + ":" + algo);
      };
      score_split(bundle.valid_slates, "valid");
      score_split(bundle.test_slates, "test");
    }
    json extra;
    extra["objective"] = objective;
    extra["config"] = best_config;
    write_meta(dir / "meta.json", key, std::move(extra));
    journal(artifact, "computed", now_ms() - t0, objective);
  });
}

namespace {

std::string stage1_key_of(const fs::path& cache_dir, const std::string& combo_id,
                          const std::string& algo) {
  const fs::path meta = cache_dir / "stage1" / combo_id / algo / "meta.json";
  std::ifstream in(meta);
  if (!in)
    fail(Status::MissingDependency,
         "stage1 output missing for " + combo_id + "/" + algo + " (run stage1)");
  json j;
  try {
    in >> j;
  } catch (...) {
    fail(Status::Parse, "bad stage1 meta " + meta.string());
  }
  return j.value("key", std::string());
}

}  // namespace

// Loads the stage-1 per-recommender score columns for one (combo, target)
// split into a ScoreTable with one unit per recommender.
static ScoreTable load_stage1_table(const fs::path& cache_dir,
                                    const MarketCombo& combo,
                                    const std::string& target,
                                    const std::vector<CandidateSlate>& slates,
                                    const std::vector<std::string>& recommenders,
                                    const std::string& split) {
  ScoreTable table;
  table.units = recommenders;
  for (const auto& slate : slates)
    table.add_slate(static_cast<int64_t>(slate.candidates.size()));
  for (size_t a = 0; a < recommenders.size(); ++a) {
    const fs::path path = cache_dir / "stage1" / combo.id / recommenders[a] /
                          (split + "_" + target + ".tsv");
    const auto values = read_score_column(
        path, slates, "score:" + combo.id + ":" + recommenders[a]);
    for (int64_t r = 0; r < table.n_rows(); ++r) table.at(r, a) = values[r];
  }
  return table;
}

// 12/16-dim ALS factors on a fused dataset, cached as a model blob.
static std::shared_ptr<FactorModel> load_or_fit_factors(
    PipelineRunner::StageContext& ctx, const PipelineConfig& cfg,
    const MarketCombo& combo, int dim) {
  const fs::path dir = cfg.cache_dir / "factors";
  const fs::path blob_path = dir / (combo.id + "_" + std::to_string(dim) + ".bin");
  const fs::path meta_path = dir / (combo.id + "_" + std::to_string(dim) + ".json");
  const std::string key = hash_hex(
      fnv1a64("factors|" + fused_key_of(cfg.cache_dir, combo) + "|" +
              std::to_string(dim)));
  if (meta_matches(meta_path, key)) {
    std::ifstream in(blob_path, std::ios::binary);
    if (in) {
      auto model = load_model(in);
      auto* factors = dynamic_cast<FactorModel*>(model.get());
      if (factors) {
        model.release();
        return std::shared_ptr<FactorModel>(factors);
      }
    }
  }
  const FusedDataset& fused = runner_load_fused(ctx, cfg.cache_dir, combo);
  HyperParams hp;
  hp.factors = dim;
  hp.reg = 0.01;
  hp.conf_alpha = 10.0;
  hp.iterations = 15;
  auto factors = fit_als(fused.store, hp,
                         mix_seed(cfg.seed, fnv1a64("factors|" + combo.id +
                                                    "|" + std::to_string(dim))));
  std::ostringstream blob;
  factors->save(blob);
  atomic_write_file(blob_path, blob.str());
  write_meta(meta_path, key);
  return std::shared_ptr<FactorModel>(std::move(factors));
}

void PipelineRunner::run_stage2() {
  auto& ctx = context();
  const auto combos = active_combos();

  struct Task {
    MarketCombo combo;
    std::string target;
    int variant;  // 0..2 = gbdt variants, 3 = linear ensemble
  };
  std::vector<Task> tasks;
  for (const auto& combo : combos) {
    for (const auto& target : cfg_.target_markets) {
      if (!combo.contains(target)) continue;
      for (int v = 0; v < 4; ++v) tasks.push_back({combo, target, v});
    }
  }

  parallel_for(0, static_cast<int64_t>(tasks.size()), cfg_.jobs, [&](int64_t ti) {
    const auto& task = tasks[ti];
    const auto& combo = task.combo;
    const auto& target = task.target;
    const int64_t t0 = now_ms();
    const auto& bundle = ctx.bundles.at(target);

    uint64_t h = fnv1a64("stage2|" + combo.id + "|" + target + "|" +
                         std::to_string(cfg_.budget_stage2) + "|" +
                         std::to_string(cfg_.cv_folds) + "|" +
                         std::to_string(cfg_.ranker_trees) + "|" +
                         std::to_string(cfg_.ranker_patience));
    for (uint64_t seed : cfg_.cv_seeds) h = fnv1a64(&seed, sizeof(seed), h);
    for (const auto& algo : cfg_.recommenders) {
      const std::string k1 = stage1_key_of(cfg_.cache_dir, combo.id, algo);
      h = fnv1a64(k1, h);
    }

    if (task.variant == 3) {
      // Eq.-1 linear ensemble over the stage-1 scores
      const std::string artifact = "stage2/" + combo.id + "/" + target + "/linear";
      const fs::path dir = cfg_.cache_dir / "stage2" / combo.id / target;
      const std::string key = hash_hex(fnv1a64("linear", h));
      if (meta_matches(dir / "linear_meta.json", key)) {
        journal(artifact, "hit", now_ms() - t0, std::nullopt);
        return;
      }
      const FusedDataset& fused = runner_load_fused(ctx, cfg_.cache_dir, combo);
      const auto valid_raw =
          load_stage1_table(cfg_.cache_dir, combo, target, bundle.valid_slates,
                            cfg_.recommenders, "valid");
      const auto test_raw =
          load_stage1_table(cfg_.cache_dir, combo, target, bundle.test_slates,
                            cfg_.recommenders, "test");
      const auto valid_norm = normalize_minmax_userwise(valid_raw);
      const auto test_norm = normalize_minmax_userwise(test_raw);
      const auto valid_lengths =
          slate_profile_lengths(fused.store, bundle.valid_slates);
      const auto test_lengths =
          slate_profile_lengths(fused.store, bundle.test_slates);
      const auto result = optimize_params(
          bundle.valid_slates, valid_norm, valid_lengths, cfg_.budget_stage2,
          mix_seed(cfg_.seed, fnv1a64(artifact)));
      const auto valid_scores =
          combine(valid_norm, result.params, valid_lengths);
      const auto test_scores = combine(test_norm, result.params, test_lengths);
      atomic_write_file(dir / "linear_params.tsv", result.params.to_tsv());
      write_score_column(dir / "linear_valid.tsv", bundle.valid_slates,
                         valid_scores, "lin:" + combo.id);
      write_score_column(dir / "linear_test.tsv", bundle.test_slates,
                         test_scores, "lin:" + combo.id);
      json extra;
      extra["objective"] = result.objective;
      write_meta(dir / "linear_meta.json", key, std::move(extra));
      journal(artifact, "computed", now_ms() - t0, result.objective);
      return;
    }

    const std::string variant_str = kVariants[task.variant];
    const std::string artifact =
        "stage2/" + combo.id + "/" + target + "/" + variant_str;
    const fs::path dir = cfg_.cache_dir / "stage2" / combo.id / target / variant_str;
    const std::string key = hash_hex(fnv1a64("gbdt|" + variant_str, h));
    if (meta_matches(dir / "meta.json", key)) {
      journal(artifact, "hit", now_ms() - t0, std::nullopt);
      return;
    }

    const FusedDataset& fused = runner_load_fused(ctx, cfg_.cache_dir, combo);
    const auto factors = load_or_fit_factors(ctx, cfg_, combo, 12);
    const auto valid_raw =
        load_stage1_table(cfg_.cache_dir, combo, target, bundle.valid_slates,
                          cfg_.recommenders, "valid");
    const auto test_raw =
        load_stage1_table(cfg_.cache_dir, combo, target, bundle.test_slates,
                          cfg_.recommenders, "test");
    const NormVariant variant = variant_from_name(variant_str);
    const auto valid_table = assemble_features(bundle.valid_slates, valid_raw,
                                               fused.store, *factors, variant);
    const auto test_table = assemble_features(bundle.test_slates, test_raw,
                                              fused.store, *factors, variant);
    if (valid_table.spec.schema_hash() != test_table.spec.schema_hash())
      fail(Status::Internal, "stage2 schema mismatch for " + artifact);

    std::vector<std::string> group_ids;
    for (const auto& slate : bundle.valid_slates) group_ids.push_back(slate.user);
    const auto plan_full = make_cv_plan(group_ids, cfg_.cv_folds, cfg_.cv_seeds);
    const std::vector<uint64_t> search_seed{cfg_.cv_seeds[0]};
    const auto plan_search = make_cv_plan(group_ids, cfg_.cv_folds, search_seed);

    auto fit_fn = [&](const RankerHyperParams& hp) {
      return [hp](const RankingDataset& train, const RankingDataset& holdout,
                  uint64_t seed) -> std::unique_ptr<CvModel> {
        return std::make_unique<RankerCvModel>(train, holdout, hp, seed);
      };
    };

    const Trial best = search(
        ranker_search_space(),
        [&](const TrialConfig& config) -> double {
          const auto hp = ranker_hp_from_config(config, cfg_.ranker_trees,
                                                cfg_.ranker_patience);
          const auto cv = cv_train_predict(valid_table.data, {}, plan_search,
                                           fit_fn(hp), 1);
          return mean_group_ndcg(valid_table.data, cv.oof);
        },
        cfg_.budget_stage2, mix_seed(cfg_.seed, fnv1a64(artifact + "|search")));

    const auto best_hp = ranker_hp_from_config(best.config, cfg_.ranker_trees,
                                               cfg_.ranker_patience);
    RankingDataset test_data = test_table.data;
    const auto cv = cv_train_predict(valid_table.data, test_data, plan_full,
                                     fit_fn(best_hp), 1);
    const double oof_ndcg = mean_group_ndcg(valid_table.data, cv.oof);

    write_score_column(dir / "oof.tsv", bundle.valid_slates, cv.oof,
                       "gbdt:" + combo.id + ":" + variant_str);
    write_score_column(dir / "test.tsv", bundle.test_slates, cv.test,
                       "gbdt:" + combo.id + ":" + variant_str);
    json extra;
    extra["objective"] = oof_ndcg;
    extra["search_objective"] = best.objective;
    extra["config"] = json::parse(config_to_string(best.config));
    extra["schema"] = hash_hex(valid_table.spec.schema_hash());
    write_meta(dir / "meta.json", key, std::move(extra));
    journal(artifact, "computed", now_ms() - t0, oof_ndcg);
  });
}

void PipelineRunner::run_stage3() {
  auto& ctx = context();
  const auto combos = active_combos();

  for (const auto& target : cfg_.target_markets) {
    const int64_t t0 = now_ms();
    const std::string artifact = "stage3/" + target;
    const fs::path dir = cfg_.cache_dir / "stage3" / target;
    const auto& bundle = ctx.bundles.at(target);

    std::vector<MarketCombo> target_combos;
    for (const auto& combo : combos)
      if (combo.contains(target)) target_combos.push_back(combo);
    if (target_combos.empty())
      fail(Status::MissingDependency,
           "no datasets selected for target market " + target);

    const auto target_alone = make_combo({}, {target});

    uint64_t h = fnv1a64("stage3|" + target + "|" +
                         std::to_string(cfg_.budget_stage3) + "|" +
                         std::to_string(cfg_.cv_folds) + "|" +
                         std::to_string(cfg_.ranker_trees) + "|" +
                         std::to_string(cfg_.ranker_patience) + "|" +
                         fused_key_of(cfg_.cache_dir, target_alone));
    for (uint64_t seed : cfg_.cv_seeds) h = fnv1a64(&seed, sizeof(seed), h);
    std::vector<std::string> missing;
    for (const auto& combo : target_combos) {
      for (const char* variant : kVariants) {
        const fs::path meta =
            cfg_.cache_dir / "stage2" / combo.id / target / variant / "meta.json";
        if (!fs::exists(meta)) {
          missing.push_back(combo.id + "/" + variant);
          continue;
        }
        std::ifstream in(meta);
        json j;
        in >> j;
        h = fnv1a64(j.value("key", std::string()), h);
      }
      const fs::path lin_meta =
          cfg_.cache_dir / "stage2" / combo.id / target / "linear_meta.json";
      if (!fs::exists(lin_meta)) missing.push_back(combo.id + "/linear");
    }
    if (!missing.empty()) {
      std::string joined;
      for (const auto& m : missing) joined += (joined.empty() ? "" : ", ") + m;
      fail(Status::MissingDependency,
           "stage2 outputs missing for: " + joined + " (run stage2)");
    }
    const std::string key = hash_hex(h);
    if (meta_matches(dir / "meta.json", key)) {
      journal(artifact, "hit", now_ms() - t0, std::nullopt);
      continue;
    }

    const FusedDataset& target_ds =
        runner_load_fused(ctx, cfg_.cache_dir, target_alone);
    const auto factors16 = load_or_fit_factors(ctx, cfg_, target_alone, 16);

    // concatenated per-dataset features for both splits
    FeatureTableBuilder valid_builder(bundle.valid_slates);
    FeatureTableBuilder test_builder(bundle.test_slates);

    auto add_stats_block = [&](FeatureTableBuilder& builder,
                               const std::vector<CandidateSlate>& slates,
                               const InteractionStore& store,
                               const std::string& prefix) {
      const int64_t n_rows = builder.n_rows();
      std::vector<float> user_len(n_rows), user_mean(n_rows), item_pop(n_rows),
          item_mean(n_rows);
      int64_t row = 0;
      for (const auto& slate : slates) {
        const auto u = store.user_map.find(slate.user);
        if (!u)
          fail(Status::InvalidArgument,
               "user " + slate.user + " missing from dataset " + prefix);
        const auto len = static_cast<float>(store.profile_length(*u));
        const auto mean = static_cast<float>(store.user_mean_rating(*u));
        for (const auto& candidate : slate.candidates) {
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
      builder.add_column(prefix + ":user:profile_len", user_len);
      builder.add_column(prefix + ":user:mean_rating", user_mean);
      builder.add_column(prefix + ":item:pop", item_pop);
      builder.add_column(prefix + ":item:mean_rating", item_mean);
    };

    for (const auto& combo : target_combos) {
      const FusedDataset& fused = runner_load_fused(ctx, cfg_.cache_dir, combo);
      const std::string prefix = "d:" + combo.id;
      for (const auto& algo : cfg_.recommenders) {
        const fs::path base = cfg_.cache_dir / "stage1" / combo.id / algo;
        const auto valid_scores = read_score_column(
            base / ("valid_" + target + ".tsv"), bundle.valid_slates,
            "score:" + combo.id + ":" + algo);
        const auto test_scores = read_score_column(
            base / ("test_" + target + ".tsv"), bundle.test_slates,
            "score:" + combo.id + ":" + algo);
        valid_builder.add_column(prefix + ":rec:" + algo, valid_scores);
        test_builder.add_column(prefix + ":rec:" + algo, test_scores);
      }
      add_stats_block(valid_builder, bundle.valid_slates, fused.store, prefix);
      add_stats_block(test_builder, bundle.test_slates, fused.store, prefix);
      const auto n_users = static_cast<float>(fused.store.n_users());
      const auto n_items = static_cast<float>(fused.store.n_items());
      const float density =
          n_users > 0 && n_items > 0
              ? static_cast<float>(fused.store.n_entries()) / (n_users * n_items)
              : 0.0f;
      std::vector<float> constant(valid_builder.n_rows());
      auto add_const = [&](FeatureTableBuilder& builder, const std::string& name,
                           float value) {
        constant.assign(static_cast<size_t>(builder.n_rows()), value);
        builder.add_column(name, constant);
      };
      for (auto* builder : {&valid_builder, &test_builder}) {
        add_const(*builder, prefix + ":ds:n_users", n_users);
        add_const(*builder, prefix + ":ds:n_items", n_items);
        add_const(*builder, prefix + ":ds:density", density);
      }
      for (const char* variant : kVariants) {
        const fs::path vdir =
            cfg_.cache_dir / "stage2" / combo.id / target / variant;
        const std::string column = "gbdt:" + combo.id + ":" + variant;
        valid_builder.add_column(
            prefix + ":gbdt:" + variant,
            read_score_column(vdir / "oof.tsv", bundle.valid_slates, column));
        test_builder.add_column(
            prefix + ":gbdt:" + variant,
            read_score_column(vdir / "test.tsv", bundle.test_slates, column));
      }
      const fs::path ldir = cfg_.cache_dir / "stage2" / combo.id / target;
      valid_builder.add_column(
          prefix + ":lin",
          read_score_column(ldir / "linear_valid.tsv", bundle.valid_slates,
                            "lin:" + combo.id));
      test_builder.add_column(
          prefix + ":lin",
          read_score_column(ldir / "linear_test.tsv", bundle.test_slates,
                            "lin:" + combo.id));
    }

    add_stats_block(valid_builder, bundle.valid_slates, target_ds.store, "tm");
    add_stats_block(test_builder, bundle.test_slates, target_ds.store, "tm");

    // 16-dim L2-normalized factors of the target-market dataset
    {
      const auto& ufac = factors16->user_factors();
      const auto& ifac = factors16->item_factors();
      const auto dim = static_cast<int32_t>(ufac.cols());
      auto add_factors = [&](FeatureTableBuilder& builder,
                             const std::vector<CandidateSlate>& slates) {
        std::vector<float> column(builder.n_rows());
        for (int32_t d = 0; d < dim; ++d) {
          int64_t row = 0;
          for (const auto& slate : slates) {
            const auto u = target_ds.store.user_map.find(slate.user);
            float value = kMissingValue;
            if (u && *u < ufac.rows()) {
              const double norm = ufac.row(*u).norm();
              if (norm > 0) value = static_cast<float>(ufac(*u, d) / norm);
            }
            for (size_t c = 0; c < slate.candidates.size(); ++c)
              column[row++] = value;
          }
          char name[16];
          std::snprintf(name, sizeof(name), "tmuf:%02d", d);
          builder.add_column(name, column);
        }
        for (int32_t d = 0; d < dim; ++d) {
          int64_t row = 0;
          for (const auto& slate : slates) {
            for (const auto& candidate : slate.candidates) {
              const auto i = target_ds.store.item_map.find(candidate);
              float value = kMissingValue;
              if (i && *i < ifac.rows()) {
                const double norm = ifac.row(*i).norm();
                if (norm > 0) value = static_cast<float>(ifac(*i, d) / norm);
              }
              column[row++] = value;
            }
          }
          char name[16];
          std::snprintf(name, sizeof(name), "tmif:%02d", d);
          builder.add_column(name, column);
        }
      };
      add_factors(valid_builder, bundle.valid_slates);
      add_factors(test_builder, bundle.test_slates);
    }

    const FeatureTable valid_table = valid_builder.build();
    const FeatureTable test_table = test_builder.build();
    if (valid_table.spec.schema_hash() != test_table.spec.schema_hash())
      fail(Status::Internal, "stage3 schema mismatch for " + target);

    std::vector<std::string> group_ids;
    for (const auto& slate : bundle.valid_slates) group_ids.push_back(slate.user);
    const auto plan_full = make_cv_plan(group_ids, cfg_.cv_folds, cfg_.cv_seeds);
    const std::vector<uint64_t> search_seed{cfg_.cv_seeds[0]};
    const auto plan_search = make_cv_plan(group_ids, cfg_.cv_folds, search_seed);

    auto fit_fn = [&](const RankerHyperParams& hp) {
      return [hp](const RankingDataset& train, const RankingDataset& holdout,
                  uint64_t seed) -> std::unique_ptr<CvModel> {
        return std::make_unique<RankerCvModel>(train, holdout, hp, seed);
      };
    };
    const Trial best = search(
        ranker_search_space(),
        [&](const TrialConfig& config) -> double {
          const auto hp = ranker_hp_from_config(config, cfg_.ranker_trees,
                                                cfg_.ranker_patience);
          const auto cv = cv_train_predict(valid_table.data, {}, plan_search,
                                           fit_fn(hp), cfg_.jobs);
          return mean_group_ndcg(valid_table.data, cv.oof);
        },
        cfg_.budget_stage3, mix_seed(cfg_.seed, fnv1a64(artifact + "|search")));
    const auto best_hp = ranker_hp_from_config(best.config, cfg_.ranker_trees,
                                               cfg_.ranker_patience);
    const auto cv = cv_train_predict(valid_table.data, test_table.data,
                                     plan_full, fit_fn(best_hp), cfg_.jobs);
    const double oof_ndcg = mean_group_ndcg(valid_table.data, cv.oof);

    write_score_column(dir / "oof.tsv", bundle.valid_slates, cv.oof,
                       "final:" + target);
    write_score_column(dir / "test.tsv", bundle.test_slates, cv.test,
                       "final:" + target);

    // last-level linear ensemble: one unit per dataset, fed by the stage-2
    // boosted predictions (variant "none"), used downstream for tie-breaking
    ScoreTable lin_valid, lin_test;
    for (const auto& combo : target_combos) {
      lin_valid.units.push_back(combo.id);
      lin_test.units.push_back(combo.id);
    }
    for (const auto& slate : bundle.valid_slates)
      lin_valid.add_slate(static_cast<int64_t>(slate.candidates.size()));
    for (const auto& slate : bundle.test_slates)
      lin_test.add_slate(static_cast<int64_t>(slate.candidates.size()));
    for (size_t c = 0; c < target_combos.size(); ++c) {
      const auto& combo = target_combos[c];
      const fs::path vdir = cfg_.cache_dir / "stage2" / combo.id / target / "none";
      const std::string column = "gbdt:" + combo.id + ":none";
      const auto valid_scores =
          read_score_column(vdir / "oof.tsv", bundle.valid_slates, column);
      const auto test_scores =
          read_score_column(vdir / "test.tsv", bundle.test_slates, column);
      for (int64_t r = 0; r < lin_valid.n_rows(); ++r)
        lin_valid.at(r, c) = valid_scores[r];
      for (int64_t r = 0; r < lin_test.n_rows(); ++r)
        lin_test.at(r, c) = test_scores[r];
    }
    const auto lin_valid_norm = normalize_minmax_userwise(lin_valid);
    const auto lin_test_norm = normalize_minmax_userwise(lin_test);
    const auto valid_lengths =
        slate_profile_lengths(target_ds.store, bundle.valid_slates);
    const auto test_lengths =
        slate_profile_lengths(target_ds.store, bundle.test_slates);
    const auto lin_result = optimize_params(
        bundle.valid_slates, lin_valid_norm, valid_lengths, cfg_.budget_stage3,
        mix_seed(cfg_.seed, fnv1a64(artifact + "|linear")));
    const auto lin_valid_scores =
        combine(lin_valid_norm, lin_result.params, valid_lengths);
    const auto lin_test_scores =
        combine(lin_test_norm, lin_result.params, test_lengths);
    atomic_write_file(dir / "linear_params.tsv", lin_result.params.to_tsv());
    write_score_column(dir / "linear_valid.tsv", bundle.valid_slates,
                       lin_valid_scores, "linfinal:" + target);
    write_score_column(dir / "linear_test.tsv", bundle.test_slates,
                       lin_test_scores, "linfinal:" + target);

    json extra;
    extra["objective"] = oof_ndcg;
    extra["linear_objective"] = lin_result.objective;
    extra["config"] = json::parse(config_to_string(best.config));
    extra["schema"] = hash_hex(valid_table.spec.schema_hash());
    write_meta(dir / "meta.json", key, std::move(extra));
    journal(artifact, "computed", now_ms() - t0, oof_ndcg);
  }
}

void PipelineRunner::run_submit() {
  auto& ctx = context();
  for (const auto& target : cfg_.target_markets) {
    const int64_t t0 = now_ms();
    const auto& bundle = ctx.bundles.at(target);
    const fs::path dir = cfg_.cache_dir / "stage3" / target;
    if (!fs::exists(dir / "test.tsv") || !fs::exists(dir / "linear_test.tsv"))
      fail(Status::MissingDependency,
           "stage3 outputs missing for " + target + " (run stage3)");
    const auto boosted = read_score_column(dir / "test.tsv", bundle.test_slates,
                                           "final:" + target);
    const auto linear = read_score_column(dir / "linear_test.tsv",
                                          bundle.test_slates,
                                          "linfinal:" + target);
    std::vector<ScoredSlate> scored;
    size_t row = 0;
    for (const auto& slate : bundle.test_slates) {
      ScoredSlate s;
      s.user = slate.user;
      s.items = slate.candidates;
      s.score.assign(boosted.begin() + row, boosted.begin() + row +
                                                slate.candidates.size());
      s.tie_score.assign(linear.begin() + row, linear.begin() + row +
                                                   slate.candidates.size());
      row += slate.candidates.size();
      scored.push_back(std::move(s));
    }
    const fs::path out = cfg_.output_dir / ("submission_" + target + ".tsv");
    write_submission(scored, out);
    journal("submit/" + target, "computed", now_ms() - t0, std::nullopt);
  }
}

std::string PipelineRunner::run_evaluate() {
  auto& ctx = context();
  const auto combos = active_combos();
  EvalReport report;

  auto stats_for = [&](const std::vector<CandidateSlate>& slates,
                       std::span<const double> scores,
                       const std::unordered_map<std::string, std::string>& qrels,
                       const std::unordered_map<std::string, int64_t>& lengths) {
    std::vector<ScoredSlate> scored;
    size_t row = 0;
    for (const auto& slate : slates) {
      ScoredSlate s;
      s.user = slate.user;
      s.items = slate.candidates;
      s.score.assign(scores.begin() + row,
                     scores.begin() + row + slate.candidates.size());
      row += slate.candidates.size();
      scored.push_back(std::move(s));
    }
    return evaluate_run(scored, qrels, lengths);
  };

  for (const auto& combo : combos) {
    for (const auto& target : cfg_.target_markets) {
      if (!combo.contains(target)) continue;
      const auto& bundle = ctx.bundles.at(target);
      const FusedDataset& fused = runner_load_fused(ctx, cfg_.cache_dir, combo);
      const auto lengths = user_length_map(fused.store, bundle.valid_slates);

      for (const auto& algo : cfg_.recommenders) {
        const fs::path path = cfg_.cache_dir / "stage1" / combo.id / algo /
                              ("valid_" + target + ".tsv");
        const auto scores = read_score_column(
            path, bundle.valid_slates, "score:" + combo.id + ":" + algo);
        report.rows.push_back({combo.id + "/" + target, algo, "stage1",
                               stats_for(bundle.valid_slates, scores,
                                         bundle.valid_qrels, lengths)});
      }
      for (const char* variant : kVariants) {
        const fs::path path = cfg_.cache_dir / "stage2" / combo.id / target /
                              variant / "oof.tsv";
        if (!fs::exists(path)) continue;
        const auto scores =
            read_score_column(path, bundle.valid_slates,
                              "gbdt:" + combo.id + ":" + variant);
        report.rows.push_back({combo.id + "/" + target, "gbdt", variant,
                               stats_for(bundle.valid_slates, scores,
                                         bundle.valid_qrels, lengths)});
      }
      const fs::path lin_path =
          cfg_.cache_dir / "stage2" / combo.id / target / "linear_valid.tsv";
      if (fs::exists(lin_path)) {
        const auto scores = read_score_column(lin_path, bundle.valid_slates,
                                              "lin:" + combo.id);
        report.rows.push_back({combo.id + "/" + target, "linear", "minmax",
                               stats_for(bundle.valid_slates, scores,
                                         bundle.valid_qrels, lengths)});
      }
    }
  }

  for (const auto& target : cfg_.target_markets) {
    const fs::path dir = cfg_.cache_dir / "stage3" / target;
    if (!fs::exists(dir / "oof.tsv")) continue;
    const auto& bundle = ctx.bundles.at(target);
    const auto target_alone = make_combo({}, {target});
    const FusedDataset& target_ds =
        runner_load_fused(ctx, cfg_.cache_dir, target_alone);
    const auto lengths = user_length_map(target_ds.store, bundle.valid_slates);
    const auto final_scores = read_score_column(
        dir / "oof.tsv", bundle.valid_slates, "final:" + target);
    report.rows.push_back({target, "gbdt-final", "none",
                           stats_for(bundle.valid_slates, final_scores,
                                     bundle.valid_qrels, lengths)});
    const auto lin_scores = read_score_column(
        dir / "linear_valid.tsv", bundle.valid_slates, "linfinal:" + target);
    report.rows.push_back({target, "linear-final", "minmax",
                           stats_for(bundle.valid_slates, lin_scores,
                                     bundle.valid_qrels, lengths)});
  }

  atomic_write_file(cfg_.output_dir / "report.tsv", report.to_tsv());
  const std::string text = report.to_text();
  atomic_write_file(cfg_.output_dir / "report.txt", text);
  journal("evaluate", "computed", 0, std::nullopt);
  return text;
}

}  // namespace crossrank
