#include "recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'K', 'M'};
constexpr uint16_t kVersion = 1;

enum class ModelKind : uint8_t {
  Popularity = 1,
  ItemSim = 2,
  UserSim = 3,
  DenseItem = 4,
  Svd = 5,
  Factor = 6,
};

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(Status::Parse, "truncated model blob");
  return v;
}

template <class T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
  write_pod<uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
std::vector<T> read_vec(std::istream& in) {
  const auto n = read_pod<uint64_t>(in);
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) fail(Status::Parse, "truncated model blob");
  return v;
}

void write_sparse(std::ostream& out, const SparseMatrix& m) {
  write_pod(out, m.rows);
  write_pod(out, m.cols);
  write_vec(out, m.indptr);
  write_vec(out, m.indices);
  write_vec(out, m.values);
}

SparseMatrix read_sparse(std::istream& in) {
  SparseMatrix m;
  m.rows = read_pod<int32_t>(in);
  m.cols = read_pod<int32_t>(in);
  m.indptr = read_vec<int64_t>(in);
  m.indices = read_vec<int32_t>(in);
  m.values = read_vec<double>(in);
  return m;
}

void write_dense(std::ostream& out, const Eigen::MatrixXd& m) {
  write_pod<int64_t>(out, m.rows());
  write_pod<int64_t>(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_dense(std::istream& in) {
  const auto rows = read_pod<int64_t>(in);
  const auto cols = read_pod<int64_t>(in);
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) fail(Status::Parse, "truncated model blob");
  return m;
}

void write_header(std::ostream& out, ModelKind kind) {
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint8_t>(kind));
}

// Bounded top-k by (value desc, index asc); min-heap keeps the worst kept
// entry on top.
class TopK {
 public:
  explicit TopK(int64_t k) : k_(k) {}

  void offer(double value, int32_t index) {
    if (k_ <= 0) return;
    if (static_cast<int64_t>(heap_.size()) < k_) {
      heap_.emplace_back(value, index);
      std::push_heap(heap_.begin(), heap_.end(), better);
      return;
    }
    if (better({value, index}, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.back() = {value, index};
      std::push_heap(heap_.begin(), heap_.end(), better);
    }
  }

  // entries sorted by index ascending, ready for CSR assembly
  std::vector<std::pair<double, int32_t>> sorted_by_index() && {
    std::sort(heap_.begin(), heap_.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return std::move(heap_);
  }

 private:
  static bool better(const std::pair<double, int32_t>& a,
                     const std::pair<double, int32_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  }

  int64_t k_;
  std::vector<std::pair<double, int32_t>> heap_;
};

SparseMatrix rows_to_csr(int32_t rows, int32_t cols,
                         std::vector<std::vector<std::pair<double, int32_t>>> row_entries) {
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.indptr.assign(static_cast<size_t>(rows) + 1, 0);
  int64_t nnz = 0;
  for (int32_t r = 0; r < rows; ++r) {
    nnz += static_cast<int64_t>(row_entries[r].size());
    m.indptr[static_cast<size_t>(r) + 1] = nnz;
  }
  m.indices.reserve(nnz);
  m.values.reserve(nnz);
  for (int32_t r = 0; r < rows; ++r) {
    for (const auto& [v, c] : row_entries[r]) {
      m.indices.push_back(c);
      m.values.push_back(v);
    }
  }
  return m;
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) fail(Status::Numeric, std::string(what) + ": non-finite value");
}

void check_user(const InteractionStore& store, int32_t user) {
  if (user < 0 || user >= store.n_users())
    fail(Status::InvalidArgument, "unknown user index " + std::to_string(user));
}

// ---- fitting ----

std::unique_ptr<Recommender> fit_toppop(const InteractionStore& store) {
  std::vector<double> pop(store.n_items());
  for (int32_t i = 0; i < store.n_items(); ++i)
    pop[i] = static_cast<double>(store.by_item.row_nnz(i));
  return std::make_unique<PopularityModel>(std::move(pop));
}

std::unique_ptr<Recommender> fit_itemknn(const InteractionStore& store,
                                         const HyperParams& hp) {
  const int32_t n = store.n_items();
  std::vector<double> norms(n);
  for (int32_t i = 0; i < n; ++i) {
    double s = 0;
    for (double v : store.by_item.row_values(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  std::vector<std::vector<std::pair<double, int32_t>>> rows(n);
  std::vector<double> accum(n, 0.0);
  std::vector<int32_t> touched;
  for (int32_t a = 0; a < n; ++a) {
    touched.clear();
    const auto users = store.by_item.row_indices(a);
    const auto ratings = store.by_item.row_values(a);
    for (size_t k = 0; k < users.size(); ++k) {
      const int32_t u = users[k];
      const double ra = ratings[k];
      const auto items = store.by_user.row_indices(u);
      const auto vals = store.by_user.row_values(u);
      for (size_t m = 0; m < items.size(); ++m) {
        if (accum[items[m]] == 0.0) touched.push_back(items[m]);
        accum[items[m]] += ra * vals[m];
      }
    }
    TopK top(hp.top_k);
    for (int32_t j : touched) {
      if (j != a && accum[j] != 0.0)
        top.offer(accum[j] / (norms[a] * norms[j] + hp.shrink), j);
      accum[j] = 0.0;
    }
    rows[a] = std::move(top).sorted_by_index();
  }
  return std::make_unique<ItemSimilarityModel>(
      rows_to_csr(n, n, std::move(rows)),
      ItemSimilarityModel::ProfileTransform::Raw, 1.0);
}

std::unique_ptr<Recommender> fit_userknn(const InteractionStore& store,
                                         const HyperParams& hp) {
  const int32_t n = store.n_users();
  std::vector<double> norms(n);
  for (int32_t u = 0; u < n; ++u) {
    double s = 0;
    for (double v : store.by_user.row_values(u)) s += v * v;
    norms[u] = std::sqrt(s);
  }
  std::vector<std::vector<std::pair<double, int32_t>>> rows(n);
  std::vector<double> accum(n, 0.0);
  std::vector<int32_t> touched;
  for (int32_t u = 0; u < n; ++u) {
    touched.clear();
    const auto items = store.by_user.row_indices(u);
    const auto ratings = store.by_user.row_values(u);
    for (size_t k = 0; k < items.size(); ++k) {
      const int32_t i = items[k];
      const double ru = ratings[k];
      const auto users = store.by_item.row_indices(i);
      const auto vals = store.by_item.row_values(i);
      for (size_t m = 0; m < users.size(); ++m) {
        if (accum[users[m]] == 0.0) touched.push_back(users[m]);
        accum[users[m]] += ru * vals[m];
      }
    }
    TopK top(hp.top_k);
    for (int32_t v : touched) {
      if (v != u && accum[v] != 0.0)
        top.offer(accum[v] / (norms[u] * norms[v] + hp.shrink), v);
      accum[v] = 0.0;
    }
    rows[u] = std::move(top).sorted_by_index();
  }
  return std::make_unique<UserSimilarityModel>(rows_to_csr(n, n, std::move(rows)));
}

// Three-step random-walk item weights: W(i,j) = sum_u P_iu(i,u)^a P_ui(u,j)^a,
// pruned to top_k per column j. RP3beta additionally divides column j by
// pop(j)^beta before pruning.
std::unique_ptr<Recommender> fit_p3(const InteractionStore& store,
                                    const HyperParams& hp, bool popularity_penalty) {
  const int32_t n = store.n_items();
  std::vector<double> user_sum(store.n_users());
  for (int32_t u = 0; u < store.n_users(); ++u)
    user_sum[u] = store.by_user.row_sum(u);
  std::vector<double> item_sum(n);
  std::vector<double> pop_penalty(n, 1.0);
  for (int32_t i = 0; i < n; ++i) {
    item_sum[i] = store.by_item.row_sum(i);
    if (popularity_penalty) {
      const auto pop = static_cast<double>(store.by_item.row_nnz(i));
      pop_penalty[i] = pop > 0 ? std::pow(pop, hp.beta) : 1.0;
    }
  }

  std::vector<TopK> column_top(n, TopK(hp.top_k));
  std::vector<double> accum(n, 0.0);
  std::vector<int32_t> touched;
  for (int32_t i = 0; i < n; ++i) {
    touched.clear();
    const auto users = store.by_item.row_indices(i);
    const auto ratings = store.by_item.row_values(i);
    for (size_t k = 0; k < users.size(); ++k) {
      const int32_t u = users[k];
      const double w_iu = std::pow(ratings[k] / item_sum[i], hp.alpha);
      const auto items = store.by_user.row_indices(u);
      const auto vals = store.by_user.row_values(u);
      for (size_t m = 0; m < items.size(); ++m) {
        const double w_uj = std::pow(vals[m] / user_sum[u], hp.alpha);
        if (accum[items[m]] == 0.0) touched.push_back(items[m]);
        accum[items[m]] += w_iu * w_uj;
      }
    }
    for (int32_t j : touched) {
      if (accum[j] != 0.0)
        column_top[j].offer(accum[j] / pop_penalty[j], i);
      accum[j] = 0.0;
    }
  }
  std::vector<std::vector<std::pair<double, int32_t>>> rows(n);
  for (int32_t j = 0; j < n; ++j)
    rows[j] = std::move(column_top[j]).sorted_by_index();
  return std::make_unique<ItemSimilarityModel>(
      rows_to_csr(n, n, std::move(rows)),
      ItemSimilarityModel::ProfileTransform::StochasticPow, hp.alpha);
}

Eigen::MatrixXd spmm(const SparseMatrix& x, const Eigen::MatrixXd& d) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows, d.cols());
  for (int32_t r = 0; r < x.rows; ++r) {
    for (int64_t k = x.indptr[r]; k < x.indptr[r + 1]; ++k)
      y.row(r) += x.values[k] * d.row(x.indices[k]);
  }
  return y;
}

Eigen::MatrixXd spmm_transposed(const SparseMatrix& x, const Eigen::MatrixXd& d) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.cols, d.cols());
  for (int32_t r = 0; r < x.rows; ++r) {
    for (int64_t k = x.indptr[r]; k < x.indptr[r + 1]; ++k)
      y.row(x.indices[k]) += x.values[k] * d.row(r);
  }
  return y;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

std::unique_ptr<Recommender> fit_puresvd(const InteractionStore& store,
                                         const HyperParams& hp, uint64_t seed) {
  const int32_t min_dim = std::min(store.n_users(), store.n_items());
  if (hp.factors > min_dim)
    fail(Status::InvalidArgument,
         "puresvd: factors " + std::to_string(hp.factors) +
             " > min(n_users, n_items) = " + std::to_string(min_dim));
  const auto f = static_cast<Eigen::Index>(hp.factors);

  if (min_dim <= 512) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(store.n_users(), store.n_items());
    for (int32_t u = 0; u < store.n_users(); ++u) {
      const auto idx = store.by_user.row_indices(u);
      const auto val = store.by_user.row_values(u);
      for (size_t k = 0; k < idx.size(); ++k) x(u, idx[k]) = val[k];
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    return std::make_unique<SvdModel>(svd.matrixV().leftCols(f).eval());
  }

  // randomized range finder with two power iterations
  const Eigen::Index l =
      std::min<Eigen::Index>(min_dim, f + 10);
  std::mt19937_64 rng(mix_seed(seed, 0x5fd1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd omega(store.n_items(), l);
  for (Eigen::Index c = 0; c < l; ++c)
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = gauss(rng);
  Eigen::MatrixXd q = thin_q(spmm(store.by_user, omega));
  for (int it = 0; it < 2; ++it) {
    const Eigen::MatrixXd z = thin_q(spmm_transposed(store.by_user, q));
    q = thin_q(spmm(store.by_user, z));
  }
  const Eigen::MatrixXd b = spmm_transposed(store.by_user, q).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  return std::make_unique<SvdModel>(svd.matrixV().leftCols(f).eval());
}

constexpr int32_t kMaxDenseItems = 8192;

Eigen::MatrixXd gram_matrix(const InteractionStore& store) {
  const int32_t n = store.n_items();
  if (n > kMaxDenseItems)
    fail(Status::Numeric, "dense item-item solver limited to " +
                              std::to_string(kMaxDenseItems) + " items, got " +
                              std::to_string(n));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto idx = store.by_user.row_indices(u);
    const auto val = store.by_user.row_values(u);
    for (size_t a = 0; a < idx.size(); ++a) {
      for (size_t b = a; b < idx.size(); ++b) {
        g(idx[a], idx[b]) += val[a] * val[b];
        if (a != b) g(idx[b], idx[a]) += val[a] * val[b];
      }
    }
  }
  return g;
}

std::unique_ptr<Recommender> fit_easer(const InteractionStore& store,
                                       const HyperParams& hp) {
  const int32_t n = store.n_items();
  Eigen::MatrixXd g = gram_matrix(store);
  g.diagonal().array() += hp.lambda;
  const Eigen::MatrixXd p =
      g.llt().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pj = p(j, j);
    if (pj == 0.0) fail(Status::Numeric, "easer: singular precision diagonal");
    b.col(j) = -p.col(j) / pj;
    b(j, j) = 0.0;
  }
  if (!b.allFinite()) fail(Status::Numeric, "easer: non-finite weights");
  return std::make_unique<DenseItemModel>(std::move(b));
}

// Per-column elastic net with non-negativity, solved by cyclic coordinate
// descent restricted to co-occurring items; converged when the largest
// weight change in a sweep drops below 1e-4, capped at 100 sweeps.
std::unique_ptr<Recommender> fit_slim(const InteractionStore& store,
                                      const HyperParams& hp) {
  const int32_t n = store.n_items();
  const Eigen::MatrixXd g = gram_matrix(store);
  constexpr double kTol = 1e-4;
  constexpr int kMaxSweeps = 100;

  std::vector<std::vector<std::pair<double, int32_t>>> rows(n);
  std::vector<int32_t> active;
  std::vector<double> w, q, diag;
  for (int32_t j = 0; j < n; ++j) {
    active.clear();
    for (int32_t k = 0; k < n; ++k)
      if (k != j && g(k, j) > 0.0) active.push_back(k);
    if (active.empty()) continue;
    const size_t na = active.size();
    w.assign(na, 0.0);
    q.assign(na, 0.0);  // (G w) restricted to the active set
    diag.resize(na);
    for (size_t a = 0; a < na; ++a) diag[a] = g(active[a], active[a]);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double max_delta = 0;
      for (size_t a = 0; a < na; ++a) {
        const int32_t k = active[a];
        const double residual = g(k, j) - q[a] + diag[a] * w[a];
        const double w_new = std::max(0.0, (residual - hp.l1) / (diag[a] + hp.l2));
        const double delta = w_new - w[a];
        if (delta != 0.0) {
          for (size_t m = 0; m < na; ++m) q[m] += g(active[m], k) * delta;
          w[a] = w_new;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (max_delta < kTol) break;
    }
    auto& row = rows[j];
    for (size_t a = 0; a < na; ++a)
      if (w[a] > 0.0) row.emplace_back(w[a], active[a]);
  }
  return std::make_unique<ItemSimilarityModel>(
      rows_to_csr(n, n, std::move(rows)),
      ItemSimilarityModel::ProfileTransform::Raw, 1.0);
}

// Implicit-feedback ALS: confidence c = 1 + conf_alpha * r, preference 1 for
// observed entries. Records the full objective after every alternating sweep.
std::unique_ptr<FactorModel> fit_als_impl(const InteractionStore& store,
                                          const HyperParams& hp, uint64_t seed) {
  const int32_t n_users = store.n_users();
  const int32_t n_items = store.n_items();
  const auto f = static_cast<Eigen::Index>(hp.factors);
  std::mt19937_64 rng(mix_seed(seed, 0xa15a));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 0.1 / std::sqrt(static_cast<double>(f));
  Eigen::MatrixXd u_fac = Eigen::MatrixXd::Zero(n_users, f);
  Eigen::MatrixXd v_fac(n_items, f);
  for (Eigen::Index r = 0; r < v_fac.rows(); ++r)
    for (Eigen::Index c = 0; c < f; ++c) v_fac(r, c) = gauss(rng) * scale;

  auto sweep_side = [&](const SparseMatrix& mat, const Eigen::MatrixXd& fixed,
                        Eigen::MatrixXd& solved) {
    const Eigen::MatrixXd gram_fixed =
        fixed.transpose() * fixed +
        hp.reg * Eigen::MatrixXd::Identity(f, f);
    for (int32_t r = 0; r < mat.rows; ++r) {
      Eigen::MatrixXd a = gram_fixed;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(f);
      for (int64_t k = mat.indptr[r]; k < mat.indptr[r + 1]; ++k) {
        const double c = 1.0 + hp.conf_alpha * mat.values[k];
        const auto row = fixed.row(mat.indices[k]);
        a.noalias() += (c - 1.0) * row.transpose() * row;
        b.noalias() += c * row.transpose();
      }
      solved.row(r) = a.ldlt().solve(b).transpose();
    }
  };

  auto objective = [&]() {
    const Eigen::MatrixXd vtv = v_fac.transpose() * v_fac;
    double sum_all = ((u_fac * vtv).cwiseProduct(u_fac)).sum();
    double obs = 0;
    for (int32_t r = 0; r < store.by_user.rows; ++r) {
      for (int64_t k = store.by_user.indptr[r]; k < store.by_user.indptr[r + 1];
           ++k) {
        const double c = 1.0 + hp.conf_alpha * store.by_user.values[k];
        const double x = u_fac.row(r).dot(v_fac.row(store.by_user.indices[k]));
        obs += c * (1.0 - x) * (1.0 - x) - x * x;
      }
    }
    return sum_all + obs +
           hp.reg * (u_fac.squaredNorm() + v_fac.squaredNorm());
  };

  std::vector<double> trace;
  trace.reserve(hp.iterations);
  for (int64_t it = 0; it < hp.iterations; ++it) {
    sweep_side(store.by_user, v_fac, u_fac);
    sweep_side(store.by_item, u_fac, v_fac);
    trace.push_back(objective());
  }
  if (!u_fac.allFinite() || !v_fac.allFinite())
    fail(Status::Numeric, "als: diverged (non-finite factors)");
  return std::make_unique<FactorModel>(std::move(u_fac), std::move(v_fac),
                                       std::move(trace));
}

}  // namespace

const char* algo_name(Algo algo) {
  switch (algo) {
    case Algo::TopPop: return "toppop";
    case Algo::ItemKnn: return "itemknn";
    case Algo::UserKnn: return "userknn";
    case Algo::P3Alpha: return "p3alpha";
    case Algo::Rp3Beta: return "rp3beta";
    case Algo::PureSvd: return "puresvd";
    case Algo::Slim: return "slim";
    case Algo::EaseR: return "easer";
    case Algo::Als: return "als";
  }
  return "?";
}

Algo algo_from_name(const std::string& name) {
  for (Algo a : {Algo::TopPop, Algo::ItemKnn, Algo::UserKnn, Algo::P3Alpha,
                 Algo::Rp3Beta, Algo::PureSvd, Algo::Slim, Algo::EaseR,
                 Algo::Als}) {
    if (name == algo_name(a)) return a;
  }
  fail(Status::Config, "unknown recommender algorithm '" + name + "'");
}

void HyperParams::validate() const {
  if (top_k < 1) fail(Status::InvalidArgument, "top_k must be >= 1");
  if (shrink < 0) fail(Status::InvalidArgument, "shrink must be >= 0");
  if (lambda <= 0) fail(Status::InvalidArgument, "lambda must be > 0");
  if (factors < 1) fail(Status::InvalidArgument, "factors must be >= 1");
  if (iterations < 1) fail(Status::InvalidArgument, "iterations must be >= 1");
  for (double v : {shrink, alpha, beta, l1, l2, lambda, reg, conf_alpha}) {
    if (!std::isfinite(v))
      fail(Status::InvalidArgument, "non-finite hyperparameter");
  }
}

std::unique_ptr<Recommender> fit(Algo algo, const InteractionStore& store,
                                 const HyperParams& hp, uint64_t seed) {
  hp.validate();
  if (store.n_entries() == 0 && algo != Algo::TopPop)
    fail(Status::InvalidArgument,
         std::string(algo_name(algo)) + ": empty interaction store");
  switch (algo) {
    case Algo::TopPop: return fit_toppop(store);
    case Algo::ItemKnn: return fit_itemknn(store, hp);
    case Algo::UserKnn: return fit_userknn(store, hp);
    case Algo::P3Alpha: return fit_p3(store, hp, false);
    case Algo::Rp3Beta: return fit_p3(store, hp, true);
    case Algo::PureSvd: return fit_puresvd(store, hp, seed);
    case Algo::Slim: return fit_slim(store, hp);
    case Algo::EaseR: return fit_easer(store, hp);
    case Algo::Als: return fit_als_impl(store, hp, seed);
  }
  fail(Status::Internal, "bad algorithm");
}

std::unique_ptr<FactorModel> fit_als(const InteractionStore& store,
                                     const HyperParams& hp, uint64_t seed) {
  hp.validate();
  return fit_als_impl(store, hp, seed);
}

// ---- scoring ----

std::vector<double> PopularityModel::score(const InteractionStore& store,
                                           int32_t user,
                                           std::span<const int32_t> items) const {
  check_user(store, user);
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k)
    if (items[k] >= 0) out[k] = pop_[items[k]];
  return out;
}

std::vector<double> ItemSimilarityModel::score(
    const InteractionStore& store, int32_t user,
    std::span<const int32_t> items) const {
  check_user(store, user);
  const auto idx = store.by_user.row_indices(user);
  const auto val = store.by_user.row_values(user);
  std::vector<double> profile(store.n_items(), 0.0);
  if (transform_ == ProfileTransform::StochasticPow) {
    const double sum = store.by_user.row_sum(user);
    for (size_t k = 0; k < idx.size(); ++k)
      profile[idx[k]] = sum > 0 ? std::pow(val[k] / sum, alpha_) : 0.0;
  } else {
    for (size_t k = 0; k < idx.size(); ++k) profile[idx[k]] = val[k];
  }
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k) {
    const int32_t j = items[k];
    if (j < 0 || j >= sim_.rows) continue;
    double s = 0;
    const auto nbr = sim_.row_indices(j);
    const auto wts = sim_.row_values(j);
    for (size_t m = 0; m < nbr.size(); ++m) s += wts[m] * profile[nbr[m]];
    out[k] = s;
  }
  check_finite(out, "item similarity score");
  return out;
}

std::vector<double> UserSimilarityModel::score(
    const InteractionStore& store, int32_t user,
    std::span<const int32_t> items) const {
  check_user(store, user);
  std::vector<double> accum(store.n_items(), 0.0);
  const auto nbr = neighbors_.row_indices(user);
  const auto wts = neighbors_.row_values(user);
  for (size_t m = 0; m < nbr.size(); ++m) {
    const int32_t v = nbr[m];
    const auto idx = store.by_user.row_indices(v);
    const auto val = store.by_user.row_values(v);
    for (size_t k = 0; k < idx.size(); ++k) accum[idx[k]] += wts[m] * val[k];
  }
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k)
    if (items[k] >= 0) out[k] = accum[items[k]];
  check_finite(out, "user similarity score");
  return out;
}

std::vector<double> DenseItemModel::score(const InteractionStore& store,
                                          int32_t user,
                                          std::span<const int32_t> items) const {
  check_user(store, user);
  const auto idx = store.by_user.row_indices(user);
  const auto val = store.by_user.row_values(user);
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k) {
    const int32_t j = items[k];
    if (j < 0 || j >= weights_.cols()) continue;
    double s = 0;
    for (size_t m = 0; m < idx.size(); ++m) s += val[m] * weights_(idx[m], j);
    out[k] = s;
  }
  check_finite(out, "easer score");
  return out;
}

std::vector<double> SvdModel::score(const InteractionStore& store, int32_t user,
                                    std::span<const int32_t> items) const {
  check_user(store, user);
  const auto idx = store.by_user.row_indices(user);
  const auto val = store.by_user.row_values(user);
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(item_factors_.cols());
  for (size_t m = 0; m < idx.size(); ++m)
    q += val[m] * item_factors_.row(idx[m]);
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k)
    if (items[k] >= 0 && items[k] < item_factors_.rows())
      out[k] = q.dot(item_factors_.row(items[k]));
  check_finite(out, "puresvd score");
  return out;
}

std::vector<double> FactorModel::score(const InteractionStore& store,
                                       int32_t user,
                                       std::span<const int32_t> items) const {
  check_user(store, user);
  if (user >= user_factors_.rows())
    fail(Status::InvalidArgument, "factor model: user outside factor table");
  std::vector<double> out(items.size(), 0.0);
  for (size_t k = 0; k < items.size(); ++k)
    if (items[k] >= 0 && items[k] < item_factors_.rows())
      out[k] = user_factors_.row(user).dot(item_factors_.row(items[k]));
  check_finite(out, "factor score");
  return out;
}

std::vector<double> score_slate(const Recommender& model,
                                const InteractionStore& store,
                                const std::string& user_token,
                                std::span<const std::string> candidates) {
  const auto user = store.user_map.find(user_token);
  if (!user)
    fail(Status::InvalidArgument, "score_slate: unknown user " + user_token);
  std::vector<int32_t> idx(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) {
    const auto found = store.item_map.find(candidates[k]);
    idx[k] = found ? *found : -1;
  }
  return model.score(store, *user, idx);
}

// ---- serialization ----

void PopularityModel::save(std::ostream& out) const {
  write_header(out, ModelKind::Popularity);
  write_vec(out, pop_);
}

void ItemSimilarityModel::save(std::ostream& out) const {
  write_header(out, ModelKind::ItemSim);
  write_pod(out, static_cast<uint8_t>(transform_));
  write_pod(out, alpha_);
  write_sparse(out, sim_);
}

void UserSimilarityModel::save(std::ostream& out) const {
  write_header(out, ModelKind::UserSim);
  write_sparse(out, neighbors_);
}

void DenseItemModel::save(std::ostream& out) const {
  write_header(out, ModelKind::DenseItem);
  write_dense(out, weights_);
}

void SvdModel::save(std::ostream& out) const {
  write_header(out, ModelKind::Svd);
  write_dense(out, item_factors_);
}

void FactorModel::save(std::ostream& out) const {
  write_header(out, ModelKind::Factor);
  write_dense(out, user_factors_);
  write_dense(out, item_factors_);
  write_vec(out, objective_trace_);
}

std::unique_ptr<Recommender> load_model(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(Status::Parse, "bad model magic");
  const auto version = read_pod<uint16_t>(in);
  if (version != kVersion)
    fail(Status::Parse, "unsupported model version " + std::to_string(version));
  const auto kind = static_cast<ModelKind>(read_pod<uint8_t>(in));
  switch (kind) {
    case ModelKind::Popularity:
      return std::make_unique<PopularityModel>(read_vec<double>(in));
    case ModelKind::ItemSim: {
      const auto transform =
          static_cast<ItemSimilarityModel::ProfileTransform>(read_pod<uint8_t>(in));
      const auto alpha = read_pod<double>(in);
      return std::make_unique<ItemSimilarityModel>(read_sparse(in), transform,
                                                   alpha);
    }
    case ModelKind::UserSim:
      return std::make_unique<UserSimilarityModel>(read_sparse(in));
    case ModelKind::DenseItem:
      return std::make_unique<DenseItemModel>(read_dense(in));
    case ModelKind::Svd:
      return std::make_unique<SvdModel>(read_dense(in));
    case ModelKind::Factor: {
      auto u = read_dense(in);
      auto v = read_dense(in);
      auto trace = read_vec<double>(in);
      return std::make_unique<FactorModel>(std::move(u), std::move(v),
                                           std::move(trace));
    }
  }
  fail(Status::Parse, "unknown model kind");
}

// ---- search spaces ----

SearchSpace default_search_space(Algo algo) {
  SearchSpace space;
  switch (algo) {
    case Algo::TopPop:
      break;
    case Algo::ItemKnn:
    case Algo::UserKnn:
      space.log_integer("top_k", 5, 800).real("shrink", 0, 1000);
      break;
    case Algo::P3Alpha:
      space.log_integer("top_k", 5, 800).real("alpha", 0, 2);
      break;
    case Algo::Rp3Beta:
      space.log_integer("top_k", 5, 800).real("alpha", 0, 2).real("beta", 0, 2);
      break;
    case Algo::PureSvd:
      space.log_integer("factors", 8, 384);
      break;
    case Algo::Slim:
      space.log_real("l1", 1e-5, 1e-1).log_real("l2", 1e-5, 1e-1);
      break;
    case Algo::EaseR:
      space.log_real("lambda", 1.0, 1e5);
      break;
    case Algo::Als:
      space.log_integer("factors", 8, 384)
          .log_real("reg", 1e-3, 10)
          .log_real("conf_alpha", 0.5, 50)
          .integer("iterations", 5, 30);
      break;
  }
  return space;
}

HyperParams hyperparams_from_config(Algo algo, const TrialConfig& config) {
  HyperParams hp;
  auto maybe_int = [&](const char* name, int64_t* out) {
    if (config.count(name)) *out = get_int(config, name);
  };
  auto maybe_real = [&](const char* name, double* out) {
    if (config.count(name)) *out = get_real(config, name);
  };
  maybe_int("top_k", &hp.top_k);
  maybe_real("shrink", &hp.shrink);
  maybe_real("alpha", &hp.alpha);
  maybe_real("beta", &hp.beta);
  maybe_real("l1", &hp.l1);
  maybe_real("l2", &hp.l2);
  maybe_real("lambda", &hp.lambda);
  maybe_int("factors", &hp.factors);
  maybe_real("reg", &hp.reg);
  maybe_real("conf_alpha", &hp.conf_alpha);
  maybe_int("iterations", &hp.iterations);
  (void)algo;
  return hp;
}

}  // namespace crossrank
