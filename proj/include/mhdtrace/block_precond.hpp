#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhdtrace/amg.hpp"
#include "mhdtrace/dense.hpp"
#include "mhdtrace/factorization.hpp"
#include "mhdtrace/krylov.hpp"
#include "mhdtrace/sparse.hpp"

namespace mhdtrace::precond {

/// Role of every unknown of a trace system. `component` is 0..3 for
/// (u_x, u_y, b_t, r) trace dofs and -1 for the per-element pressure; `node`
/// is the skeleton node (or the element for pressure dofs).
struct TraceDofInfo {
  std::vector<Index> node;
  std::vector<int> component;

  Index size() const noexcept { return static_cast<Index>(component.size()); }
  static constexpr int pressure = -1;
};

/// K = [[F, -B^T], [B, 0]] after moving every pressure unknown behind the
/// others. `perm[s]` is the original index of saddle index s.
struct SaddleSystem {
  SparseMatrixCsr f;
  SparseMatrixCsr b;
  SparseMatrixCsr bt;
  Vector rhs_u;
  Vector rhs_p;
  std::vector<Index> perm;
  std::vector<Index> u_node;     // per F unknown
  std::vector<int> u_component;  // per F unknown

  Index nu() const noexcept { return f.nrows(); }
  Index np() const noexcept { return b.nrows(); }
  Vector to_saddle(std::span<const double> original) const;
  Vector from_saddle(std::span<const double> saddle) const;
  /// [[F, -B^T], [B, 0]] in saddle ordering.
  SparseMatrixCsr assemble() const;
  /// Nodal layout of F after the returned reordering: `order[k]` is the F
  /// index placed at position k.
  amg::NodalBlockLayout nodal_layout(std::vector<Index> &order) const;
};

/// Throws DimensionError when the pressure-pressure block is nonzero or the
/// pressure column is not the negated transpose of the pressure row.
SaddleSystem split_saddle(const SparseMatrixCsr &k, std::span<const double> rhs,
                          const TraceDofInfo &info);

/// True when B^T 1 vanishes, i.e. the constant pressure is a null vector of
/// the saddle operator and of B B^T.
bool has_constant_pressure_nullspace(const SparseMatrixCsr &bt);

/// S^{-1} ~= (B B^T)^{-1} B F B^T (B B^T)^{-1}. With a constant nullspace the
/// first pressure unknown is pinned: its row and column of B B^T are replaced
/// by the identity and the corresponding entry of both solves is zeroed.
class BfbtSchur final : public krylov::Preconditioner {
public:
  BfbtSchur(const SparseMatrixCsr &f, const SparseMatrixCsr &b, const SparseMatrixCsr &bt,
            bool allow_pinning = true);
  Index size() const override { return b_->nrows(); }
  void apply(std::span<const double> r, std::span<double> z) const override;
  Vector apply(std::span<const double> r) const;
  bool pinned() const noexcept { return pinned_; }
  const SparseMatrixCsr &bbt() const noexcept { return bbt_; }

private:
  void solve_bbt(std::span<double> v) const;

  const SparseMatrixCsr *f_;
  const SparseMatrixCsr *b_;
  const SparseMatrixCsr *bt_;
  SparseMatrixCsr bbt_;
  std::optional<SparseLuFactors> lu_;
  bool pinned_ = false;
};

/// Exact inverse through a sparse LU factorization.
class LuInverse final : public krylov::Preconditioner {
public:
  explicit LuInverse(const SparseMatrixCsr &a) : lu_(sparse_lu_factor(a)) {}
  Index size() const override { return lu_.size(); }
  void apply(std::span<const double> r, std::span<double> z) const override { lu_.solve(r, z); }

private:
  SparseLuFactors lu_;
};

/// Exact Schur complement inverse (B F^{-1} B^T)^{-1} from a dense
/// factorization; pins the first unknown like BfbtSchur when B^T 1 = 0.
class ExactSchurInverse final : public krylov::Preconditioner {
public:
  ExactSchurInverse(const SparseMatrixCsr &f, const SparseMatrixCsr &b, const SparseMatrixCsr &bt);
  Index size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) const override;
  const DenseMatrix &schur() const noexcept { return s_; }
  bool pinned() const noexcept { return pinned_; }

private:
  Index n_ = 0;
  DenseMatrix s_;
  std::optional<DenseLu> lu_;
  bool pinned_ = false;
};

/// `steps` Richardson iterations x += M^{-1}(r - A x) from x = 0 with
/// M = ILU(0) of A.
class IluRichardson final : public krylov::Preconditioner {
public:
  IluRichardson(const SparseMatrixCsr &a, Index steps);
  Index size() const override { return a_->nrows(); }
  void apply(std::span<const double> r, std::span<double> z) const override;

private:
  const SparseMatrixCsr *a_;
  Ilu0Factors ilu_;
  Index steps_;
};

/// One AMG V-cycle on F in nodal ordering, wrapped back to F's ordering.
class NodalAmgInverse final : public krylov::Preconditioner {
public:
  NodalAmgInverse(const SaddleSystem &s, const amg::AmgConfig &cfg);
  Index size() const override { return static_cast<Index>(order_.size()); }
  void apply(std::span<const double> r, std::span<double> z) const override;
  bool is_variable() const override { return h_.is_variable(); }
  const amg::AmgHierarchy &hierarchy() const noexcept { return h_; }

private:
  std::vector<Index> order_;
  amg::AmgHierarchy h_;
};

/// Right preconditioner [[F~^{-1}, F~^{-1} B^T S~^{-1}], [0, S~^{-1}]]:
/// y_p = S~^{-1} r_p, y_u = F~^{-1}(r_u + B^T y_p).
class BlockPreconditioner final : public krylov::Preconditioner {
public:
  BlockPreconditioner(SparseMatrixCsr bt, std::shared_ptr<const krylov::Preconditioner> finv,
                      std::shared_ptr<const krylov::Preconditioner> sinv);
  Index size() const override { return bt_.nrows() + bt_.ncols(); }
  void apply(std::span<const double> r, std::span<double> z) const override;
  bool is_variable() const override { return finv_->is_variable() || sinv_->is_variable(); }

private:
  SparseMatrixCsr bt_;
  std::shared_ptr<const krylov::Preconditioner> finv_;
  std::shared_ptr<const krylov::Preconditioner> sinv_;
};

/// Conjugates a saddle-ordering preconditioner into the original ordering.
class PermutedPreconditioner final : public krylov::Preconditioner {
public:
  PermutedPreconditioner(std::vector<Index> perm, std::shared_ptr<const krylov::Preconditioner> inner)
      : perm_(std::move(perm)), inner_(std::move(inner)) {}
  Index size() const override { return static_cast<Index>(perm_.size()); }
  void apply(std::span<const double> r, std::span<double> z) const override;
  bool is_variable() const override { return inner_->is_variable(); }

private:
  std::vector<Index> perm_;
  std::shared_ptr<const krylov::Preconditioner> inner_;
};

/// Global ILU(0) of the full trace matrix with `steps` Richardson steps.
std::shared_ptr<krylov::Preconditioner> one_level_ilu0_baseline(const SparseMatrixCsr &k,
                                                                Index steps = 3);

enum class PreconditionerId { dd_ilu0, bfbt_amg_ilu0, bfbt_amg_gmres, ideal };

PreconditionerId parse_preconditioner_id(const std::string &name);
std::string to_string(PreconditionerId id);
/// Iteration cap of the outer solver for each preconditioner.
Index default_max_iterations(PreconditionerId id);

struct TracePreconditioner {
  std::shared_ptr<const krylov::Preconditioner> m; // acts in the original ordering
  bool flexible = false;
  std::shared_ptr<const SaddleSystem> saddle;      // null for dd-ilu0
  std::shared_ptr<const NodalAmgInverse> amg;      // null unless an AMG variant
};

/// Builds the selected preconditioner for the trace matrix `k`. For the AMG
/// variants the smoother kind in `amg_cfg` is overridden by the id.
TracePreconditioner make_trace_preconditioner(PreconditionerId id, const SparseMatrixCsr &k,
                                              std::span<const double> rhs,
                                              const TraceDofInfo &info,
                                              const amg::AmgConfig &amg_cfg = {},
                                              Index ilu_steps = 3);

} // namespace mhdtrace::precond
