#pragma once

#include <span>
#include <vector>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace {

/// Row-major dense matrix for element-local work.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(Index nrows, Index ncols, double fill = 0.0)
      : nrows_(nrows), ncols_(ncols),
        values_(static_cast<std::size_t>(nrows * ncols), fill) {}
  DenseMatrix(Index nrows, Index ncols, std::vector<double> row_major);

  static DenseMatrix identity(Index n);

  Index nrows() const noexcept { return nrows_; }
  Index ncols() const noexcept { return ncols_; }

  double &operator()(Index i, Index j) { return values_[i * ncols_ + j]; }
  double operator()(Index i, Index j) const { return values_[i * ncols_ + j]; }

  std::span<double> row(Index i) { return {values_.data() + i * ncols_, static_cast<std::size_t>(ncols_)}; }
  std::span<const double> row(Index i) const { return {values_.data() + i * ncols_, static_cast<std::size_t>(ncols_)}; }

  const std::vector<double> &values() const noexcept { return values_; }
  std::vector<double> &values() noexcept { return values_; }

  DenseMatrix operator*(const DenseMatrix &rhs) const;
  Vector operator*(std::span<const double> x) const;
  DenseMatrix transposed() const;

private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<double> values_;
};

/// LU factorization with partial pivoting, P A = L U, stored in place.
class DenseLu {
public:
  explicit DenseLu(DenseMatrix a);

  Index size() const noexcept { return lu_.nrows(); }
  /// Solves A x = b in place.
  void solve_in_place(std::span<double> b) const;
  /// Solves A X = B for every column of B.
  DenseMatrix solve(const DenseMatrix &b) const;

private:
  DenseMatrix lu_;
  std::vector<Index> pivots_;
};

DenseMatrix dense_lu_solve(const DenseMatrix &a, const DenseMatrix &b);

} // namespace mhdtrace
