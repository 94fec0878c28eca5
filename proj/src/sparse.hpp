#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace crossrank {

// CSR matrix. Column indices within each row are strictly increasing, so
// there is at most one entry per (row, col).
struct SparseMatrix {
  int32_t rows = 0;
  int32_t cols = 0;
  std::vector<int64_t> indptr;  // size rows + 1
  std::vector<int32_t> indices;
  std::vector<double> values;

  SparseMatrix() : indptr(1, 0) {}

  // Entries must be unique per (row, col); sorted internally.
  static SparseMatrix from_triplets(int32_t rows, int32_t cols,
                                    std::span<const int32_t> r,
                                    std::span<const int32_t> c,
                                    std::span<const double> v);

  int64_t nnz() const { return static_cast<int64_t>(values.size()); }

  int64_t row_nnz(int32_t r) const { return indptr[r + 1] - indptr[r]; }

  std::span<const int32_t> row_indices(int32_t r) const {
    return {indices.data() + indptr[r], static_cast<size_t>(row_nnz(r))};
  }

  std::span<const double> row_values(int32_t r) const {
    return {values.data() + indptr[r], static_cast<size_t>(row_nnz(r))};
  }

  double row_sum(int32_t r) const;

  SparseMatrix transposed() const;

  uint64_t content_hash() const;
};

}  // namespace crossrank
