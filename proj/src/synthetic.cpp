#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

void SynthConfig::validate() const {
  if (n_source_markets < 0 || n_target_markets < 1)
    fail(Status::Config, "synth: need at least one target market");
  if (users_per_market < 1 || catalog_size < 1 || latent_dim < 1)
    fail(Status::Config, "synth: sizes must be positive");
  if (min_ratings < 1 || max_ratings < min_ratings)
    fail(Status::Config, "synth: bad ratings-per-user range");
  if (noise < 0) fail(Status::Config, "synth: noise must be >= 0");
  if (slate_size < 2) fail(Status::Config, "synth: slate size must be >= 2");
  // every user needs slate_size-1 negatives outside their rated items, twice
  if (catalog_size - (max_ratings + 2) < slate_size - 1)
    fail(Status::Config,
         "synth: infeasible negative sampling (catalog too small)");
}

namespace {

struct MarketDraft {
  std::vector<RatingTriple> train;
  std::vector<CandidateSlate> valid_slates;
  std::vector<CandidateSlate> test_slates;
  std::unordered_map<std::string, std::string> valid_qrels;
  std::unordered_map<std::string, std::string> test_qrels;
  std::vector<std::pair<std::string, std::vector<double>>> user_factors;
};

std::vector<RatingTriple> five_core(const std::vector<RatingTriple>& train) {
  // iteratively drop users/items with fewer than 5 ratings; survivors get 1.0
  std::vector<RatingTriple> current = train;
  for (;;) {
    std::unordered_map<std::string, int> user_count, item_count;
    for (const auto& t : current) {
      user_count[t.user]++;
      item_count[t.item]++;
    }
    std::vector<RatingTriple> next;
    next.reserve(current.size());
    for (const auto& t : current) {
      if (user_count[t.user] >= 5 && item_count[t.item] >= 5) next.push_back(t);
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }
  for (auto& t : current) t.rating = 1.0;
  return current;
}

MarketDraft draft_market(const SynthConfig& cfg, const std::string& market,
                         const std::vector<std::vector<double>>& item_factors,
                         uint64_t seed) {
  MarketDraft draft;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));

  // market-specific taste center keeps cross-market fusion informative while
  // still sharing the item space
  std::vector<double> center(cfg.latent_dim);
  for (auto& c : center) c = 0.6 * gauss(rng) * inv_sqrt_d;

  std::uniform_int_distribution<int> n_ratings_dist(cfg.min_ratings,
                                                    cfg.max_ratings);
  std::uniform_int_distribution<int> item_dist(0, cfg.catalog_size - 1);

  std::vector<std::pair<double, int32_t>> affinity(cfg.catalog_size);
  for (int u = 0; u < cfg.users_per_market; ++u) {
    char token[64];
    std::snprintf(token, sizeof(token), "%s_u%05d", market.c_str(), u);
    const std::string user(token);

    std::vector<double> p(cfg.latent_dim);
    for (int d = 0; d < cfg.latent_dim; ++d)
      p[d] = center[d] + gauss(rng) * inv_sqrt_d;
    draft.user_factors.emplace_back(user, p);

    for (int32_t i = 0; i < cfg.catalog_size; ++i) {
      double dot = 0;
      for (int d = 0; d < cfg.latent_dim; ++d) dot += p[d] * item_factors[i][d];
      affinity[i] = {dot + cfg.noise * gauss(rng), i};
    }
    const int n_rated = n_ratings_dist(rng) + 2;  // two held-out positives
    std::partial_sort(affinity.begin(), affinity.begin() + n_rated,
                      affinity.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });

    std::unordered_set<int32_t> rated;
    for (int j = 0; j < n_rated; ++j) rated.insert(affinity[j].second);

    // hold out one validation and one test positive
    std::uniform_int_distribution<int> pick(0, n_rated - 1);
    const int valid_pos = pick(rng);
    int test_pos = pick(rng);
    while (test_pos == valid_pos) test_pos = pick(rng);

    auto item_token = [](int32_t i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "i%05d", i);
      return std::string(buf);
    };

    for (int j = 0; j < n_rated; ++j) {
      if (j == valid_pos || j == test_pos) continue;
      // affinity rank within the profile maps onto the 1..5 scale
      const double rating =
          5.0 - std::floor(5.0 * static_cast<double>(j) / n_rated);
      draft.train.push_back({user, item_token(affinity[j].second), rating});
    }

    auto make_slate = [&](int32_t positive_item,
                          std::unordered_set<int32_t>& used) {
      CandidateSlate slate;
      slate.user = user;
      std::vector<int32_t> items;
      items.push_back(positive_item);
      while (static_cast<int>(items.size()) < cfg.slate_size) {
        const int32_t i = item_dist(rng);
        if (rated.count(i) || used.count(i)) continue;
        used.insert(i);
        items.push_back(i);
      }
      std::shuffle(items.begin(), items.end(), rng);
      for (int32_t i : items) slate.candidates.push_back(item_token(i));
      return slate;
    };

    const int32_t valid_item = affinity[valid_pos].second;
    const int32_t test_item = affinity[test_pos].second;
    std::unordered_set<int32_t> used_valid{valid_item};
    std::unordered_set<int32_t> used_test{test_item};
    auto valid_slate = make_slate(valid_item, used_valid);
    valid_slate.positive = item_token(valid_item);
    draft.valid_qrels[user] = *valid_slate.positive;
    draft.valid_slates.push_back(std::move(valid_slate));
    auto test_slate = make_slate(test_item, used_test);
    draft.test_qrels[user] = item_token(test_item);
    draft.test_slates.push_back(std::move(test_slate));
  }
  return draft;
}

std::vector<std::string> market_names(const SynthConfig& cfg) {
  std::vector<std::string> names;
  for (int m = 0; m < cfg.n_source_markets; ++m)
    names.push_back("s" + std::to_string(m + 1));
  for (int m = 0; m < cfg.n_target_markets; ++m)
    names.push_back("t" + std::to_string(m + 1));
  return names;
}

}  // namespace

SynthWorld generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SynthWorld world;

  std::mt19937_64 item_rng(mix_seed(cfg.seed, 0x17e6));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  std::vector<std::vector<double>> item_factors(
      cfg.catalog_size, std::vector<double>(cfg.latent_dim));
  for (int32_t i = 0; i < cfg.catalog_size; ++i)
    for (int d = 0; d < cfg.latent_dim; ++d)
      item_factors[i][d] = gauss(item_rng) * inv_sqrt_d;

  for (int32_t i = 0; i < cfg.catalog_size; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "i%05d", i);
    world.item_factors.emplace_back(buf, item_factors[i]);
  }

  const auto names = market_names(cfg);
  for (size_t m = 0; m < names.size(); ++m) {
    const auto& market = names[m];
    MarketDraft draft =
        draft_market(cfg, market, item_factors, mix_seed(cfg.seed, m + 1));

    MarketBundle bundle;
    bundle.market_id = market;
    bundle.train = build_store(draft.train);
    bundle.train_5core = build_store(five_core(draft.train));
    bundle.valid_slates = std::move(draft.valid_slates);
    bundle.test_slates = std::move(draft.test_slates);
    bundle.valid_qrels = std::move(draft.valid_qrels);
    world.test_qrels[market] = std::move(draft.test_qrels);
    world.user_factors[market] = std::move(draft.user_factors);
    world.bundles.emplace(market, std::move(bundle));
  }
  return world;
}

void write_synthetic_world(const SynthConfig& cfg,
                           const std::filesystem::path& out_dir) {
  const SynthWorld world = generate_synthetic(cfg);

  auto factor_line = [](const std::string& token,
                        const std::vector<double>& values) {
    std::string line = token;
    for (double v : values) {
      line += '\t';
      line += format_double(v);
    }
    line += '\n';
    return line;
  };

  std::string item_table;
  for (const auto& [token, values] : world.item_factors)
    item_table += factor_line(token, values);
  atomic_write_file(out_dir / "factors_items.tsv", item_table);

  for (const auto& [market, bundle] : world.bundles) {
    const auto dir = out_dir / market;
    std::filesystem::create_directories(dir);

    auto store_tsv = [](const InteractionStore& store, bool with_rating) {
      std::string out;
      for (int32_t u = 0; u < store.n_users(); ++u) {
        const auto idx = store.by_user.row_indices(u);
        const auto val = store.by_user.row_values(u);
        for (size_t k = 0; k < idx.size(); ++k) {
          out += store.user_map.token(u);
          out += '\t';
          out += store.item_map.token(idx[k]);
          if (with_rating) {
            out += '\t';
            out += format_double(val[k]);
          }
          out += '\n';
        }
      }
      return out;
    };
    atomic_write_file(dir / "train.tsv", store_tsv(bundle.train, true));
    atomic_write_file(dir / "train_5core.tsv",
                      store_tsv(bundle.train_5core, false));

    auto run_tsv = [](const std::vector<CandidateSlate>& slates) {
      std::string out;
      for (const auto& slate : slates) {
        out += slate.user;
        out += '\t';
        for (size_t c = 0; c < slate.candidates.size(); ++c) {
          if (c) out += ',';
          out += slate.candidates[c];
        }
        out += '\n';
      }
      return out;
    };
    atomic_write_file(dir / "valid_run.tsv", run_tsv(bundle.valid_slates));
    atomic_write_file(dir / "test_run.tsv", run_tsv(bundle.test_slates));

    auto qrel_tsv = [&](const std::vector<CandidateSlate>& slates,
                        const std::unordered_map<std::string, std::string>& qrels) {
      std::string out;
      for (const auto& slate : slates) {
        out += slate.user;
        out += '\t';
        out += qrels.at(slate.user);
        out += "\t1\n";
      }
      return out;
    };
    atomic_write_file(dir / "valid_qrel.tsv",
                      qrel_tsv(bundle.valid_slates, bundle.valid_qrels));
    atomic_write_file(dir / "test_qrel.tsv",
                      qrel_tsv(bundle.test_slates, world.test_qrels.at(market)));

    std::string user_table;
    for (const auto& [token, values] : world.user_factors.at(market))
      user_table += factor_line(token, values);
    atomic_write_file(dir / "factors_users.tsv", user_table);
  }
}

}  // namespace crossrank
