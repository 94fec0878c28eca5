#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "interaction_store.hpp"
#include "tuner.hpp"

namespace crossrank {

enum class Algo {
  TopPop,
  ItemKnn,
  UserKnn,
  P3Alpha,
  Rp3Beta,
  PureSvd,
  Slim,
  EaseR,
  Als,
};

const char* algo_name(Algo algo);
Algo algo_from_name(const std::string& name);

struct HyperParams {
  int64_t top_k = 100;       // neighborhood size
  double shrink = 0.0;       // cosine shrinkage
  double alpha = 1.0;        // P3alpha exponent
  double beta = 0.6;         // RP3beta popularity penalty
  double l1 = 1e-4;          // SLIM elastic net
  double l2 = 1e-4;
  double lambda = 250.0;     // EASE-R ridge
  int64_t factors = 32;      // latent dimension
  double reg = 0.01;         // ALS ridge
  double conf_alpha = 10.0;  // ALS confidence scale
  int64_t iterations = 15;

  void validate() const;
};

// A fitted stage-1 model. `items` entries may be -1 for candidates outside
// the store's item space; those score exactly 0.
class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual std::vector<double> score(const InteractionStore& store, int32_t user,
                                    std::span<const int32_t> items) const = 0;
  virtual void save(std::ostream& out) const = 0;
};

// Deterministic given (store, hp, seed).
std::unique_ptr<Recommender> fit(Algo algo, const InteractionStore& store,
                                 const HyperParams& hp, uint64_t seed);

std::unique_ptr<Recommender> load_model(std::istream& in);

// Scores one slate; candidate tokens missing from the item map get 0.
std::vector<double> score_slate(const Recommender& model,
                                const InteractionStore& store,
                                const std::string& user_token,
                                std::span<const std::string> candidates);

// Default hyperparameter search space per algorithm (may be empty).
SearchSpace default_search_space(Algo algo);
HyperParams hyperparams_from_config(Algo algo, const TrialConfig& config);

// --- concrete models (exposed for tests and serialization) ---

class PopularityModel : public Recommender {
 public:
  explicit PopularityModel(std::vector<double> pop) : pop_(std::move(pop)) {}
  std::vector<double> score(const InteractionStore&, int32_t,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const std::vector<double>& popularity() const { return pop_; }

 private:
  std::vector<double> pop_;
};

// Item-item weights; row j holds the neighbors used to score candidate j.
// StochasticPow scoring raises the row-normalized profile to `alpha`
// (random-walk first step); Raw uses rating values directly.
class ItemSimilarityModel : public Recommender {
 public:
  enum class ProfileTransform : uint8_t { Raw = 0, StochasticPow = 1 };

  ItemSimilarityModel(SparseMatrix sim, ProfileTransform transform, double alpha)
      : sim_(std::move(sim)), transform_(transform), alpha_(alpha) {}
  std::vector<double> score(const InteractionStore& store, int32_t user,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const SparseMatrix& similarity() const { return sim_; }
  ProfileTransform transform() const { return transform_; }

 private:
  SparseMatrix sim_;
  ProfileTransform transform_;
  double alpha_;
};

class UserSimilarityModel : public Recommender {
 public:
  explicit UserSimilarityModel(SparseMatrix neighbors)
      : neighbors_(std::move(neighbors)) {}
  std::vector<double> score(const InteractionStore& store, int32_t user,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const SparseMatrix& neighbors() const { return neighbors_; }

 private:
  SparseMatrix neighbors_;
};

// Dense item-item weights (EASE-R).
class DenseItemModel : public Recommender {
 public:
  explicit DenseItemModel(Eigen::MatrixXd weights)
      : weights_(std::move(weights)) {}
  std::vector<double> score(const InteractionStore& store, int32_t user,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  Eigen::MatrixXd weights_;
};

// PureSVD: scores via r_u * V * V^T restricted to the requested columns.
class SvdModel : public Recommender {
 public:
  explicit SvdModel(Eigen::MatrixXd item_factors)
      : item_factors_(std::move(item_factors)) {}
  std::vector<double> score(const InteractionStore& store, int32_t user,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const Eigen::MatrixXd& item_factors() const { return item_factors_; }

 private:
  Eigen::MatrixXd item_factors_;
};

// User x item factor model (ALS, and externally provided factor tables).
class FactorModel : public Recommender {
 public:
  FactorModel(Eigen::MatrixXd user_factors, Eigen::MatrixXd item_factors,
              std::vector<double> objective_trace = {})
      : user_factors_(std::move(user_factors)),
        item_factors_(std::move(item_factors)),
        objective_trace_(std::move(objective_trace)) {}
  std::vector<double> score(const InteractionStore& store, int32_t user,
                            std::span<const int32_t> items) const override;
  void save(std::ostream& out) const override;
  const Eigen::MatrixXd& user_factors() const { return user_factors_; }
  const Eigen::MatrixXd& item_factors() const { return item_factors_; }
  // implicit-feedback objective recorded after each alternating sweep
  const std::vector<double>& objective_trace() const { return objective_trace_; }

 private:
  Eigen::MatrixXd user_factors_;
  Eigen::MatrixXd item_factors_;
  std::vector<double> objective_trace_;
};

// ALS factorization reused by the feature pipeline (12/16-dim factors).
std::unique_ptr<FactorModel> fit_als(const InteractionStore& store,
                                     const HyperParams& hp, uint64_t seed);

}  // namespace crossrank
