#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace::krylov {

class LinearOperator {
public:
  virtual ~LinearOperator() = default;
  virtual Index size() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

/// Approximate inverse action z = M^{-1} r. `is_variable()` is true when the
/// action may change between calls (inner Krylov iterations), which forces the
/// flexible outer solver.
class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  virtual Index size() const = 0;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
  virtual bool is_variable() const { return false; }
};

class MatrixOperator final : public LinearOperator {
public:
  explicit MatrixOperator(const SparseMatrixCsr &a) : a_(&a) {}
  Index size() const override { return a_->nrows(); }
  void apply(std::span<const double> x, std::span<double> y) const override {
    spmv(*a_, x, y);
  }

private:
  const SparseMatrixCsr *a_;
};

class IdentityPreconditioner final : public Preconditioner {
public:
  explicit IdentityPreconditioner(Index n) : n_(n) {}
  Index size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) const override;

private:
  Index n_;
};

/// Wraps a callable; handy for tests and bindings.
class FunctionPreconditioner final : public Preconditioner {
public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionPreconditioner(Index n, Fn fn, bool variable = false)
      : n_(n), fn_(std::move(fn)), variable_(variable) {}
  Index size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) const override { fn_(r, z); }
  bool is_variable() const override { return variable_; }

private:
  Index n_;
  Fn fn_;
  bool variable_;
};

struct IterationHistory {
  std::vector<double> relative_residuals; // entry k: after k iterations (k = 0 is 1)
  bool converged = false;
  Index iterations = 0;
  double true_relative_residual = 0.0; // recomputed ||b - A x|| / ||b||
};

struct SolverOptions {
  double tolerance = 1e-6;
  bool tolerance_is_relative = true;
  Index max_iterations = 200;
  /// Reorthogonalize when the second Gram-Schmidt pass finds components
  /// larger than this fraction of the vector norm.
  double reorthogonalization_threshold = 1e-8;
};

struct SolveResult {
  Vector x;
  IterationHistory history;
};

class KrylovBreakdown : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-restarted right-preconditioned GMRES (Arnoldi with modified
/// Gram-Schmidt and Givens rotations). The preconditioner must be fixed.
/// `x0` may be empty (zero initial guess).
SolveResult gmres(const LinearOperator &a, const Preconditioner &m,
                  std::span<const double> b, const SolverOptions &opts,
                  std::span<const double> x0 = {});

/// Flexible GMRES: stores the preconditioned directions, so the
/// preconditioner may vary between iterations.
SolveResult fgmres(const LinearOperator &a, const Preconditioner &m,
                   std::span<const double> b, const SolverOptions &opts,
                   std::span<const double> x0 = {});

/// CSV rows "solve_id,iter,relres".
void write_history_csv(std::ostream &os, const std::string &solve_id,
                       const IterationHistory &h, bool header = false);

} // namespace mhdtrace::krylov
