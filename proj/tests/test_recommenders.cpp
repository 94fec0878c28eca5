#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "recommenders.hpp"
#include "status.hpp"
#include "test_util.hpp"

using namespace crossrank;
using testutil::dense_from;
using testutil::random_store;
using testutil::store_from;

namespace {

std::vector<int32_t> all_items(const InteractionStore& store) {
  std::vector<int32_t> items(store.n_items());
  std::iota(items.begin(), items.end(), 0);
  return items;
}

// hand-rolled Gauss-Jordan inverse, independent of the Eigen solve path
std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = a[col][col];
    REQUIRE(std::abs(d) > 1e-14);
    for (size_t c = 0; c < n; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (size_t c = 0; c < n; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

// dense EASE oracle: B = I - P * diag(1/diag(P)), P = (X^T X + lambda I)^-1
std::vector<std::vector<double>> ease_oracle(const InteractionStore& store,
                                             double lambda) {
  const auto x = dense_from(store);
  const size_t n = store.n_items();
  std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t u = 0; u < x.size(); ++u) gram[i][j] += x[u][i] * x[u][j];
  for (size_t i = 0; i < n; ++i) gram[i][i] += lambda;
  const auto p = invert(gram);
  std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) b[i][j] = i == j ? 0.0 : -p[i][j] / p[j][j];
  return b;
}

}  // namespace

TEST_SUITE("recommenders") {

TEST_CASE("toppop counts distinct raters") {
  const auto store =
      store_from({{"u1", "i1", 5.0}, {"u2", "i1", 1.0}, {"u1", "i2", 3.0}});
  const auto model = fit(Algo::TopPop, store, {}, 0);
  const auto scores = model->score(store, 0, all_items(store));
  CHECK(scores[*store.item_map.find("i1")] == 2.0);
  CHECK(scores[*store.item_map.find("i2")] == 1.0);
  // toppop tolerates an empty store
  const auto empty = build_store({});
  CHECK_NOTHROW(fit(Algo::TopPop, empty, {}, 0));
}

TEST_CASE("itemknn reproduces the two-user cosine example") {
  // rows u1 = (1, 1), u2 = (0, 1) over items (a, b)
  const auto store =
      store_from({{"u1", "a", 1.0}, {"u1", "b", 1.0}, {"u2", "b", 1.0}});
  HyperParams hp;
  hp.top_k = 10;
  hp.shrink = 0.0;
  const auto model = fit(Algo::ItemKnn, store, hp, 0);
  const std::vector<int32_t> target{*store.item_map.find("a")};
  const auto scores =
      model->score(store, *store.user_map.find("u2"), target);
  CHECK(scores[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("itemknn matches a dense cosine oracle on a 20x20 store") {
  const auto store = random_store(20, 20, 0.35, 11);
  HyperParams hp;
  hp.top_k = 1000;  // no pruning
  hp.shrink = 7.5;
  const auto model = fit(Algo::ItemKnn, store, hp, 0);
  const auto* knn = dynamic_cast<const ItemSimilarityModel*>(model.get());
  REQUIRE(knn != nullptr);

  const auto x = dense_from(store);
  const int n = store.n_items();
  std::vector<double> norm(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (size_t u = 0; u < x.size(); ++u) norm[i] += x[u][i] * x[u][i];
    norm[i] = std::sqrt(norm[i]);
  }
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = 0;
      for (size_t u = 0; u < x.size(); ++u) dot += x[u][i] * x[u][j];
      if (dot != 0.0) sim[i][j] = dot / (norm[i] * norm[j] + hp.shrink);
    }
  }
  // model rows hold the neighbors of each candidate column
  std::vector<std::vector<double>> got(n, std::vector<double>(n, 0.0));
  for (int a = 0; a < n; ++a) {
    const auto idx = knn->similarity().row_indices(a);
    const auto val = knn->similarity().row_values(a);
    for (size_t k = 0; k < idx.size(); ++k) got[a][idx[k]] = val[k];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(std::abs(got[i][j] - sim[j][i]) <= 1e-10);

  // scores agree with the dense dot-product route
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto scores = model->score(store, u, all_items(store));
    for (int i = 0; i < n; ++i) {
      double want = 0;
      for (int j = 0; j < n; ++j) want += x[u][j] * sim[j][i];
      CHECK(std::abs(scores[i] - want) <= 1e-10);
    }
  }
}

TEST_CASE("itemknn similarity is symmetric before pruning") {
  const auto store = random_store(15, 12, 0.4, 5);
  HyperParams hp;
  hp.top_k = 1000;
  hp.shrink = 0.0;
  const auto model = fit(Algo::ItemKnn, store, hp, 0);
  const auto* knn = dynamic_cast<const ItemSimilarityModel*>(model.get());
  const int n = store.n_items();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (int a = 0; a < n; ++a) {
    const auto idx = knn->similarity().row_indices(a);
    const auto val = knn->similarity().row_values(a);
    for (size_t k = 0; k < idx.size(); ++k) w[a][idx[k]] = val[k];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(w[i][j] == doctest::Approx(w[j][i]).epsilon(1e-12));
}

TEST_CASE("userknn matches a dense user-cosine oracle") {
  const auto store = random_store(14, 18, 0.3, 23);
  HyperParams hp;
  hp.top_k = 1000;
  hp.shrink = 3.0;
  const auto model = fit(Algo::UserKnn, store, hp, 0);
  const auto x = dense_from(store);
  const int nu = store.n_users();
  const int ni = store.n_items();
  std::vector<double> norm(nu, 0.0);
  for (int u = 0; u < nu; ++u) {
    for (int i = 0; i < ni; ++i) norm[u] += x[u][i] * x[u][i];
    norm[u] = std::sqrt(norm[u]);
  }
  for (int u = 0; u < nu; ++u) {
    const auto scores = model->score(store, u, all_items(store));
    for (int i = 0; i < ni; ++i) {
      double want = 0;
      for (int v = 0; v < nu; ++v) {
        if (v == u) continue;
        double dot = 0;
        for (int j = 0; j < ni; ++j) dot += x[u][j] * x[v][j];
        if (dot == 0.0) continue;
        want += dot / (norm[u] * norm[v] + hp.shrink) * x[v][i];
      }
      CHECK(std::abs(scores[i] - want) <= 1e-10);
    }
  }
}

TEST_CASE("p3alpha reproduces the three-step walk example") {
  const auto store =
      store_from({{"u1", "i1", 1.0}, {"u1", "i2", 1.0}, {"u2", "i2", 1.0}});
  HyperParams hp;
  hp.alpha = 1.0;
  hp.top_k = 100;
  const auto model = fit(Algo::P3Alpha, store, hp, 0);
  const auto scores =
      model->score(store, *store.user_map.find("u1"), all_items(store));
  CHECK(scores[*store.item_map.find("i1")] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(scores[*store.item_map.find("i2")] == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("p3alpha equals an explicit row-stochastic matrix-product oracle") {
  const auto store = random_store(9, 7, 0.45, 31);
  HyperParams hp;
  hp.alpha = 1.0;
  hp.top_k = 1000;
  const auto model = fit(Algo::P3Alpha, store, hp, 0);
  const auto x = dense_from(store);
  const int nu = store.n_users(), ni = store.n_items();
  // row-stochastic user->item and item->user transitions
  std::vector<std::vector<double>> p_ui(nu, std::vector<double>(ni, 0.0));
  std::vector<std::vector<double>> p_iu(ni, std::vector<double>(nu, 0.0));
  for (int u = 0; u < nu; ++u) {
    double s = 0;
    for (int i = 0; i < ni; ++i) s += x[u][i];
    for (int i = 0; i < ni; ++i) p_ui[u][i] = s > 0 ? x[u][i] / s : 0.0;
  }
  for (int i = 0; i < ni; ++i) {
    double s = 0;
    for (int u = 0; u < nu; ++u) s += x[u][i];
    for (int u = 0; u < nu; ++u) p_iu[i][u] = s > 0 ? x[u][i] / s : 0.0;
  }
  for (int u = 0; u < nu; ++u) {
    const auto scores = model->score(store, u, all_items(store));
    double sum = 0;
    for (int j = 0; j < ni; ++j) {
      double want = 0;  // three-step walk u -> i -> v -> j
      for (int i = 0; i < ni; ++i)
        for (int v = 0; v < nu; ++v)
          want += p_ui[u][i] * p_iu[i][v] * p_ui[v][j];
      CHECK(std::abs(scores[j] - want) <= 1e-12);
      sum += scores[j];
    }
    if (store.profile_length(u) > 0) CHECK(std::abs(sum - 1.0) <= 1e-10);
  }
}

TEST_CASE("rp3beta with beta 0 equals p3alpha") {
  const auto store = random_store(12, 10, 0.4, 47);
  HyperParams hp;
  hp.alpha = 0.8;
  hp.beta = 0.0;
  hp.top_k = 1000;
  const auto p3 = fit(Algo::P3Alpha, store, hp, 0);
  const auto rp3 = fit(Algo::Rp3Beta, store, hp, 0);
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto a = p3->score(store, u, all_items(store));
    const auto b = rp3->score(store, u, all_items(store));
    for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("rp3beta penalizes popular items") {
  const auto store = random_store(12, 10, 0.4, 47);
  HyperParams hp;
  hp.alpha = 1.0;
  hp.beta = 1.0;
  hp.top_k = 1000;
  const auto p3 = fit(Algo::P3Alpha, store, hp, 0);
  const auto rp3 = fit(Algo::Rp3Beta, store, hp, 0);
  const auto a = p3->score(store, 0, all_items(store));
  const auto b = rp3->score(store, 0, all_items(store));
  for (int32_t i = 0; i < store.n_items(); ++i) {
    const double pop = static_cast<double>(store.item_popularity(i));
    if (a[i] > 0) CHECK(b[i] == doctest::Approx(a[i] / pop).epsilon(1e-9));
  }
}

TEST_CASE("puresvd reconstructs a full-rank store") {
  const auto store = random_store(12, 8, 0.5, 3);
  HyperParams hp;
  hp.factors = 8;  // full column rank
  const auto model = fit(Algo::PureSvd, store, hp, 9);
  const auto x = dense_from(store);
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto scores = model->score(store, u, all_items(store));
    for (int32_t i = 0; i < store.n_items(); ++i)
      CHECK(std::abs(scores[i] - x[u][i]) <= 1e-6);
  }
}

TEST_CASE("puresvd rejects factors beyond the matrix rank bound") {
  const auto store = random_store(6, 5, 0.5, 3);
  HyperParams hp;
  hp.factors = 6;
  CHECK_THROWS_AS(fit(Algo::PureSvd, store, hp, 0), Error);
}

TEST_CASE("randomized puresvd agrees with the dense path on a tall store") {
  // exactly rank-6 matrix (copied prototype rows) over >512x>512 dims so the
  // randomized branch runs and the rank-6 projection is route-independent
  const int n_items = 520, n_protos = 6;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> rating(1, 5);
  std::vector<std::vector<std::pair<int, double>>> protos(n_protos);
  for (auto& proto : protos)
    for (int i = 0; i < n_items; ++i)
      if (unit(rng) < 0.1) proto.emplace_back(i, rating(rng));
  std::vector<RatingTriple> triples;
  for (int u = 0; u < 600; ++u)
    for (const auto& [i, r] : protos[u % n_protos])
      triples.push_back({"u" + std::to_string(u), "i" + std::to_string(i), r});
  const auto store = build_store(triples);
  REQUIRE(std::min(store.n_users(), store.n_items()) > 512);

  HyperParams hp;
  hp.factors = n_protos;
  const auto model = fit(Algo::PureSvd, store, hp, 9);
  // oracle: dense SVD through Eigen on the same matrix
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(store.n_users(), store.n_items());
  const auto dense = dense_from(store);
  for (int32_t u = 0; u < store.n_users(); ++u)
    for (int32_t i = 0; i < store.n_items(); ++i) x(u, i) = dense[u][i];
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  REQUIRE(svd.singularValues()(n_protos - 1) > 1e-6);   // rank really is 6
  REQUIRE(svd.singularValues()(n_protos) < 1e-8);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(n_protos);
  std::vector<int32_t> items(store.n_items());
  std::iota(items.begin(), items.end(), 0);
  for (int32_t u = 0; u < 12; ++u) {
    const auto scores = model->score(store, u, items);
    const Eigen::RowVectorXd want = x.row(u) * v * v.transpose();
    for (int32_t i = 0; i < store.n_items(); ++i)
      CHECK(std::abs(scores[i] - want(i)) <= 1e-6);
  }
}

TEST_CASE("easer matches the dense closed-form oracle across lambdas") {
  for (const uint64_t seed : {101, 202}) {
    const auto store = random_store(25, 15, 0.3, seed);
    for (const double lambda : {1.0, 10.0, 50.0, 250.0, 1000.0}) {
      HyperParams hp;
      hp.lambda = lambda;
      const auto model = fit(Algo::EaseR, store, hp, 0);
      const auto* ease = dynamic_cast<const DenseItemModel*>(model.get());
      REQUIRE(ease != nullptr);
      const auto oracle = ease_oracle(store, lambda);
      for (int32_t i = 0; i < store.n_items(); ++i) {
        CHECK(ease->weights()(i, i) == 0.0);
        for (int32_t j = 0; j < store.n_items(); ++j)
          CHECK(std::abs(ease->weights()(i, j) - oracle[i][j]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("slim weights are non-negative with zero diagonal and shrink with l2") {
  const auto store = random_store(30, 10, 0.4, 59);
  double previous_norm = std::numeric_limits<double>::infinity();
  for (const double l2 : {0.1, 10.0, 1000.0}) {
    HyperParams hp;
    hp.l1 = 0.0;
    hp.l2 = l2;
    const auto model = fit(Algo::Slim, store, hp, 0);
    const auto* slim = dynamic_cast<const ItemSimilarityModel*>(model.get());
    REQUIRE(slim != nullptr);
    double norm = 0;
    for (int32_t j = 0; j < store.n_items(); ++j) {
      const auto idx = slim->similarity().row_indices(j);
      const auto val = slim->similarity().row_values(j);
      for (size_t k = 0; k < idx.size(); ++k) {
        CHECK(idx[k] != j);      // diagonal excluded
        CHECK(val[k] >= 0.0);    // non-negativity on
        norm += val[k] * val[k];
      }
    }
    norm = std::sqrt(norm);
    CHECK(norm <= previous_norm + 1e-9);
    previous_norm = norm;
  }
}

TEST_CASE("slim approximates column regressions") {
  // light l2, no l1: X * W should track X noticeably better than zero
  const auto store = random_store(40, 8, 0.5, 71);
  HyperParams hp;
  hp.l1 = 1e-5;
  hp.l2 = 1e-3;
  const auto model = fit(Algo::Slim, store, hp, 0);
  const auto x = dense_from(store);
  double err = 0, base = 0;
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto scores = model->score(store, u, all_items(store));
    for (int32_t i = 0; i < store.n_items(); ++i) {
      err += (scores[i] - x[u][i]) * (scores[i] - x[u][i]);
      base += x[u][i] * x[u][i];
    }
  }
  CHECK(err < 0.5 * base);
}

TEST_CASE("als objective is non-increasing across sweeps") {
  const auto store = random_store(25, 18, 0.3, 83);
  HyperParams hp;
  hp.factors = 6;
  hp.reg = 0.05;
  hp.conf_alpha = 5.0;
  hp.iterations = 15;
  const auto model = fit_als(store, hp, 4);
  const auto& trace = model->objective_trace();
  REQUIRE(trace.size() == 15);
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] <= trace[i - 1] + 1e-9 * std::abs(trace[i - 1]));
}

TEST_CASE("fit is deterministic given store, hyperparameters and seed") {
  const auto store = random_store(20, 15, 0.3, 7);
  HyperParams hp;
  hp.factors = 5;
  hp.iterations = 6;
  for (const Algo algo : {Algo::Als, Algo::PureSvd, Algo::ItemKnn}) {
    const auto a = fit(algo, store, hp, 99);
    const auto b = fit(algo, store, hp, 99);
    for (int32_t u = 0; u < store.n_users(); ++u)
      CHECK(a->score(store, u, all_items(store)) ==
            b->score(store, u, all_items(store)));
  }
}

TEST_CASE("cold items score exactly zero for every model") {
  const auto store = random_store(15, 10, 0.4, 13);
  HyperParams hp;
  hp.factors = 4;
  hp.iterations = 5;
  const std::vector<int32_t> items{0, -1, 3, -1};
  for (const Algo algo : {Algo::TopPop, Algo::ItemKnn, Algo::UserKnn,
                          Algo::P3Alpha, Algo::Rp3Beta, Algo::PureSvd,
                          Algo::Slim, Algo::EaseR, Algo::Als}) {
    const auto model = fit(algo, store, hp, 0);
    const auto scores = model->score(store, 2, items);
    CHECK(scores[1] == 0.0);
    CHECK(scores[3] == 0.0);
  }
  // token-level wrapper maps unknown candidates to the cold rule
  const auto model = fit(Algo::ItemKnn, store, hp, 0);
  const std::vector<std::string> candidates{"i0", "never-seen"};
  const auto scores = score_slate(*model, store, "u2", candidates);
  CHECK(scores[1] == 0.0);
}

TEST_CASE("scores are equivariant to candidate order") {
  const auto store = random_store(12, 14, 0.35, 29);
  HyperParams hp;
  hp.factors = 4;
  hp.iterations = 5;
  std::vector<int32_t> items = all_items(store);
  std::vector<int32_t> shuffled = items;
  std::mt19937_64 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (const Algo algo : {Algo::TopPop, Algo::ItemKnn, Algo::UserKnn,
                          Algo::P3Alpha, Algo::Rp3Beta, Algo::PureSvd,
                          Algo::Slim, Algo::EaseR, Algo::Als}) {
    const auto model = fit(algo, store, hp, 1);
    const auto direct = model->score(store, 1, items);
    const auto perm = model->score(store, 1, shuffled);
    for (size_t k = 0; k < shuffled.size(); ++k)
      CHECK(perm[k] == direct[shuffled[k]]);
  }
}

TEST_CASE("models serialize to blobs and back") {
  const auto store = random_store(14, 11, 0.35, 37);
  HyperParams hp;
  hp.factors = 4;
  hp.iterations = 5;
  for (const Algo algo : {Algo::TopPop, Algo::ItemKnn, Algo::UserKnn,
                          Algo::P3Alpha, Algo::Rp3Beta, Algo::PureSvd,
                          Algo::Slim, Algo::EaseR, Algo::Als}) {
    const auto model = fit(algo, store, hp, 2);
    std::ostringstream blob;
    model->save(blob);
    std::istringstream in(blob.str());
    const auto loaded = load_model(in);
    for (int32_t u = 0; u < store.n_users(); ++u)
      CHECK(loaded->score(store, u, all_items(store)) ==
            model->score(store, u, all_items(store)));
  }
}

TEST_CASE("empty stores are rejected except for toppop") {
  const auto empty = build_store({});
  HyperParams hp;
  CHECK_THROWS_AS(fit(Algo::ItemKnn, empty, hp, 0), Error);
  CHECK_THROWS_AS(fit(Algo::Als, empty, hp, 0), Error);
}

TEST_CASE("unknown users are rejected at scoring time") {
  const auto store = random_store(5, 5, 0.5, 1);
  const auto model = fit(Algo::TopPop, store, {}, 0);
  CHECK_THROWS_AS(model->score(store, 99, all_items(store)), Error);
  CHECK_THROWS_AS(score_slate(*model, store, "ghost", {}), Error);
}

}  // TEST_SUITE
