#pragma once

#include <span>
#include <vector>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace {

/// Zero-fill incomplete LU. L (unit lower) and U share the pattern of the
/// source matrix; the diagonal slot holds U's diagonal.
class Ilu0Factors {
public:
  Ilu0Factors() = default;

  Index size() const noexcept { return lu_.nrows(); }
  const SparseMatrixCsr &combined() const noexcept { return lu_; }
  SparseMatrixCsr lower() const; // with explicit unit diagonal
  SparseMatrixCsr upper() const;

  /// Solves L U x = r.
  void apply(std::span<const double> r, std::span<double> x) const;
  Vector apply(std::span<const double> r) const;

private:
  friend Ilu0Factors ilu0_factor(const SparseMatrixCsr &a);
  SparseMatrixCsr lu_;
  std::vector<Index> diag_pos_;
};

/// Pivots below 1e-14 times the largest diagonal magnitude raise
/// SingularMatrixError with the offending row.
Ilu0Factors ilu0_factor(const SparseMatrixCsr &a);
Vector ilu0_apply(const Ilu0Factors &f, std::span<const double> r);

/// Fill-reducing ordering: greedy minimum degree on the pattern of A + A^T
/// (ties broken by lowest index).
std::vector<Index> minimum_degree_ordering(const SparseMatrixCsr &a);

/// Sparse LU with fill: P A Q = L U. Columns are preordered with
/// minimum_degree_ordering; rows use threshold partial pivoting that prefers
/// the diagonal when |a_kk| >= pivot_threshold * max |column|.
class SparseLuFactors {
public:
  Index size() const noexcept { return lower_.nrows(); }
  const SparseMatrixCsr &lower() const noexcept { return lower_; }
  const SparseMatrixCsr &upper() const noexcept { return upper_; }
  /// row_perm[i] = pivot step that eliminated original row i.
  const std::vector<Index> &row_perm() const noexcept { return row_perm_; }
  const std::vector<Index> &col_perm() const noexcept { return col_perm_; }

  void solve(std::span<const double> b, std::span<double> x) const;
  Vector solve(std::span<const double> b) const;

private:
  friend SparseLuFactors sparse_lu_factor(const SparseMatrixCsr &a,
                                          double pivot_threshold);
  SparseMatrixCsr lower_;
  SparseMatrixCsr upper_;
  std::vector<Index> row_perm_;
  std::vector<Index> col_perm_;
};

SparseLuFactors sparse_lu_factor(const SparseMatrixCsr &a,
                                 double pivot_threshold = 0.1);
Vector lu_solve(const SparseLuFactors &f, std::span<const double> b);

} // namespace mhdtrace
