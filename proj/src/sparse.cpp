#include "sparse.hpp"

#include <algorithm>
#include <numeric>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

SparseMatrix SparseMatrix::from_triplets(int32_t rows, int32_t cols,
                                         std::span<const int32_t> r,
                                         std::span<const int32_t> c,
                                         std::span<const double> v) {
  if (r.size() != c.size() || r.size() != v.size())
    fail(Status::InvalidArgument, "from_triplets: length mismatch");
  const size_t n = r.size();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (r[a] != r[b]) return r[a] < r[b];
    return c[a] < c[b];
  });

  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.indptr.assign(static_cast<size_t>(rows) + 1, 0);
  m.indices.resize(n);
  m.values.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t i = order[k];
    if (r[i] < 0 || r[i] >= rows || c[i] < 0 || c[i] >= cols)
      fail(Status::InvalidArgument, "from_triplets: index out of range");
    if (k > 0 && r[order[k - 1]] == r[i] && c[order[k - 1]] == c[i])
      fail(Status::InvalidArgument, "from_triplets: duplicate entry");
    m.indices[k] = c[i];
    m.values[k] = v[i];
    m.indptr[static_cast<size_t>(r[i]) + 1]++;
  }
  for (size_t i = 1; i < m.indptr.size(); ++i) m.indptr[i] += m.indptr[i - 1];
  return m;
}

double SparseMatrix::row_sum(int32_t r) const {
  double s = 0;
  for (double v : row_values(r)) s += v;
  return s;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.indptr.assign(static_cast<size_t>(cols) + 1, 0);
  t.indices.resize(values.size());
  t.values.resize(values.size());
  for (int32_t c : indices) t.indptr[static_cast<size_t>(c) + 1]++;
  for (size_t i = 1; i < t.indptr.size(); ++i) t.indptr[i] += t.indptr[i - 1];
  std::vector<int64_t> next(t.indptr.begin(), t.indptr.end() - 1);
  for (int32_t r = 0; r < rows; ++r) {
    for (int64_t k = indptr[r]; k < indptr[r + 1]; ++k) {
      const int64_t pos = next[indices[k]]++;
      t.indices[pos] = r;
      t.values[pos] = values[k];
    }
  }
  return t;
}

uint64_t SparseMatrix::content_hash() const {
  uint64_t h = fnv1a64(&rows, sizeof(rows));
  h = fnv1a64(&cols, sizeof(cols), h);
  h = fnv1a64(indptr.data(), indptr.size() * sizeof(int64_t), h);
  h = fnv1a64(indices.data(), indices.size() * sizeof(int32_t), h);
  h = fnv1a64(values.data(), values.size() * sizeof(double), h);
  return h;
}

}  // namespace crossrank
