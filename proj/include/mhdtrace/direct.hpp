#pragma once

#include <memory>
#include <span>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace {

/// Supernodal sparse LU with a fill-reducing column ordering, for systems
/// too large for `sparse_lu_factor`.
class DirectSolver {
public:
  /// Throws SingularMatrixError when the factorization fails.
  explicit DirectSolver(const SparseMatrixCsr &a);
  ~DirectSolver();
  DirectSolver(DirectSolver &&) noexcept;
  DirectSolver &operator=(DirectSolver &&) noexcept;

  Index size() const noexcept { return n_; }
  Vector solve(std::span<const double> b) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index n_ = 0;
};

} // namespace mhdtrace
