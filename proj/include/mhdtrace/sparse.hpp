#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhdtrace {

using Index = std::int64_t;
using Vector = std::vector<double>;

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization meets a pivot it cannot use. `row` is the
/// (original-ordering) row where it happened.
class SingularMatrixError : public std::runtime_error {
public:
  SingularMatrixError(const std::string &what, Index row)
      : std::runtime_error(what), row_(row) {}
  Index row() const noexcept { return row_; }

private:
  Index row_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row. Immutable once built except through `values_mut`, which keeps the
/// pattern fixed.
class SparseMatrixCsr {
public:
  SparseMatrixCsr() = default;
  SparseMatrixCsr(Index nrows, Index ncols, std::vector<Index> row_offsets,
                  std::vector<Index> col_indices, std::vector<double> values);

  /// Builds from coordinate entries; duplicates are summed. Explicit zeros are
  /// kept so callers can reserve pattern slots (e.g. a zero diagonal).
  static SparseMatrixCsr from_triplets(Index nrows, Index ncols,
                                       std::vector<Triplet> entries);
  static SparseMatrixCsr identity(Index n);
  static SparseMatrixCsr from_dense(Index nrows, Index ncols,
                                    std::span<const double> row_major,
                                    double drop_below = 0.0);

  Index nrows() const noexcept { return nrows_; }
  Index ncols() const noexcept { return ncols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  const std::vector<Index> &row_offsets() const noexcept { return row_offsets_; }
  const std::vector<Index> &col_indices() const noexcept { return col_indices_; }
  const std::vector<double> &values() const noexcept { return values_; }
  std::vector<double> &values_mut() noexcept { return values_; }

  /// Stored value at (i, j) or 0 when (i, j) is outside the pattern.
  double at(Index i, Index j) const;
  /// Position of (i, j) in `values()`, or -1.
  Index find(Index i, Index j) const;

  std::vector<Triplet> to_triplets() const;
  std::vector<double> to_dense() const; // row-major
  double max_abs() const;

  /// Throws if the CSR invariants do not hold.
  void validate() const;

private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// y = A x
Vector spmv(const SparseMatrixCsr &a, std::span<const double> x);
void spmv(const SparseMatrixCsr &a, std::span<const double> x,
          std::span<double> y);
/// y = b - A x
void residual(const SparseMatrixCsr &a, std::span<const double> x,
              std::span<const double> b, std::span<double> r);

SparseMatrixCsr transpose(const SparseMatrixCsr &a);
/// C = A * B
SparseMatrixCsr multiply(const SparseMatrixCsr &a, const SparseMatrixCsr &b);
/// Rows and columns taken from `keep_rows` / `keep_cols` (new index = position
/// in the list).
SparseMatrixCsr submatrix(const SparseMatrixCsr &a,
                          std::span<const Index> keep_rows,
                          std::span<const Index> keep_cols);
/// B(perm[i], perm[j]) = A(i, j) for a square A.
SparseMatrixCsr permute_symmetric(const SparseMatrixCsr &a,
                                  std::span<const Index> perm);

// Small vector helpers shared across modules.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// MatrixMarket coordinate text ("%%MatrixMarket matrix coordinate real
/// general"), 1-based indices.
void write_matrix_market(std::ostream &os, const SparseMatrixCsr &a);
SparseMatrixCsr read_matrix_market(std::istream &is);
void write_matrix_market(const std::string &path, const SparseMatrixCsr &a);
SparseMatrixCsr read_matrix_market(const std::string &path);

} // namespace mhdtrace
