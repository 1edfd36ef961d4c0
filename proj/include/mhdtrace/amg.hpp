#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhdtrace/factorization.hpp"
#include "mhdtrace/krylov.hpp"
#include "mhdtrace/sparse.hpp"

namespace mhdtrace::amg {

/// Unknowns grouped by node. Each node owns a contiguous dof range; within a
/// node the dofs carry strictly increasing component ids (0..dofs_per_node-1).
/// Nodes may miss components, e.g. boundary nodes whose constrained dofs were
/// eliminated.
struct NodalBlockLayout {
  Index dofs_per_node = 1;
  std::vector<Index> node_offsets{0};
  std::vector<int> components;

  static NodalBlockLayout uniform(Index nodes, Index dofs_per_node);

  Index node_count() const noexcept { return static_cast<Index>(node_offsets.size()) - 1; }
  Index dof_count() const noexcept { return node_offsets.back(); }
  void validate() const;
};

struct Aggregates {
  std::vector<Index> node_to_aggregate;
  Index count = 0;
};

/// Greedy root aggregation: nodes visited in `seed_order`; an unaggregated
/// node becomes a root and absorbs its unaggregated neighbors; a root left
/// alone joins the aggregate of its first aggregated neighbor.
Aggregates aggregate(const std::vector<std::vector<Index>> &node_graph,
                     std::span<const Index> seed_order);

/// Node adjacency from collapsing each node block of A (structure only,
/// symmetrized, no self loops).
std::vector<std::vector<Index>> node_graph(const SparseMatrixCsr &a,
                                           const NodalBlockLayout &layout);

enum class SmootherKind { jacobi, gauss_seidel, chebyshev, ilu0, gmres_ilu0 };

SmootherKind parse_smoother_kind(const std::string &name);
std::string to_string(SmootherKind kind);

struct SmootherConfig {
  SmootherKind kind = SmootherKind::gmres_ilu0;
  Index steps = 3;          // for gmres-ilu0: inner GMRES iterations
  double jacobi_damping = 2.0 / 3.0;
  double chebyshev_ratio = 30.0;
  Index power_iterations = 10;
};

class Smoother {
public:
  Smoother(const SparseMatrixCsr &a, const SmootherConfig &cfg);
  /// Improves x in place for A x = b using `steps` sweeps (Richardson steps,
  /// polynomial degree or inner GMRES iterations depending on the kind).
  void smooth(std::span<const double> b, std::span<double> x, Index steps) const;
  bool is_variable() const noexcept { return cfg_.kind == SmootherKind::gmres_ilu0; }
  const SmootherConfig &config() const noexcept { return cfg_; }

private:
  const SparseMatrixCsr *a_;
  SmootherConfig cfg_;
  Vector inv_diag_;
  std::optional<Ilu0Factors> ilu_;
  double lambda_max_ = 0.0;
};

/// kind-specific smoothing from x0; returns the smoothed iterate.
Vector smooth(const SmootherConfig &cfg, const SparseMatrixCsr &a,
              std::span<const double> x0, std::span<const double> b);

struct AmgConfig {
  SmootherConfig smoother;
  Index pre_smoothing = 3;
  Index post_smoothing = 3;
  Index coarse_threshold = 64; // nodes
  Index max_levels = 10;
};

struct Level {
  SparseMatrixCsr a;
  NodalBlockLayout layout;
  SparseMatrixCsr p;  // prolongator to this level from the next coarser one
  SparseMatrixCsr pt;
  Aggregates aggregates;
  std::unique_ptr<Smoother> smoother;
};

class AmgHierarchy {
public:
  Index level_count() const noexcept { return static_cast<Index>(levels_.size()); }
  const Level &level(Index l) const { return levels_[l]; }
  const SparseLuFactors &coarse_factors() const { return *coarse_; }
  const AmgConfig &config() const noexcept { return cfg_; }
  Index size() const { return levels_.front().a.nrows(); }
  bool is_variable() const;
  double operator_complexity() const;

  /// One V-cycle from a zero initial guess: approximately F^{-1} r.
  Vector vcycle(std::span<const double> r) const;
  void vcycle(std::span<const double> r, std::span<double> z) const;

  void print_summary(std::ostream &os) const;

private:
  friend AmgHierarchy build_hierarchy(const SparseMatrixCsr &f,
                                      const NodalBlockLayout &layout,
                                      const AmgConfig &cfg);
  void cycle(Index l, std::span<const double> b, std::span<double> x) const;

  AmgConfig cfg_;
  std::vector<Level> levels_;
  std::optional<SparseLuFactors> coarse_;
};

/// Throws SingularMatrixError when the coarsest operator cannot be factored.
AmgHierarchy build_hierarchy(const SparseMatrixCsr &f, const NodalBlockLayout &layout,
                             const AmgConfig &cfg);

class AmgPreconditioner final : public krylov::Preconditioner {
public:
  explicit AmgPreconditioner(std::shared_ptr<const AmgHierarchy> h) : h_(std::move(h)) {}
  Index size() const override { return h_->size(); }
  void apply(std::span<const double> r, std::span<double> z) const override { h_->vcycle(r, z); }
  bool is_variable() const override { return h_->is_variable(); }

private:
  std::shared_ptr<const AmgHierarchy> h_;
};

} // namespace mhdtrace::amg
