#include "mhdtrace/block_precond.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mhdtrace::precond {

Vector SaddleSystem::to_saddle(std::span<const double> original) const {
  if (original.size() != perm.size()) throw DimensionError("to_saddle: size mismatch");
  Vector s(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) s[i] = original[perm[i]];
  return s;
}

Vector SaddleSystem::from_saddle(std::span<const double> saddle) const {
  if (saddle.size() != perm.size()) throw DimensionError("from_saddle: size mismatch");
  Vector o(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) o[perm[i]] = saddle[i];
  return o;
}

SparseMatrixCsr SaddleSystem::assemble() const {
  const Index n = nu() + np();
  std::vector<Triplet> t = f.to_triplets();
  for (const auto &e : bt.to_triplets()) t.push_back({e.row, nu() + e.col, -e.value});
  for (const auto &e : b.to_triplets()) t.push_back({nu() + e.row, e.col, e.value});
  return SparseMatrixCsr::from_triplets(n, n, std::move(t));
}

amg::NodalBlockLayout SaddleSystem::nodal_layout(std::vector<Index> &order) const {
  std::map<Index, std::vector<Index>> by_node;
  for (Index i = 0; i < nu(); ++i) by_node[u_node[i]].push_back(i);
  amg::NodalBlockLayout layout;
  layout.dofs_per_node = 4;
  order.clear();
  for (auto &[node, dofs] : by_node) {
    std::stable_sort(dofs.begin(), dofs.end(),
                     [&](Index a, Index b) { return u_component[a] < u_component[b]; });
    for (Index d : dofs) {
      order.push_back(d);
      layout.components.push_back(u_component[d]);
    }
    layout.node_offsets.push_back(static_cast<Index>(order.size()));
  }
  layout.validate();
  return layout;
}

SaddleSystem split_saddle(const SparseMatrixCsr &k, std::span<const double> rhs,
                          const TraceDofInfo &info) {
  const Index n = k.nrows();
  if (k.ncols() != n || static_cast<Index>(rhs.size()) != n || info.size() != n ||
      static_cast<Index>(info.node.size()) != n)
    throw DimensionError("split_saddle: matrix, rhs and dof info sizes differ");
  std::vector<Index> uidx, pidx;
  for (Index i = 0; i < n; ++i)
    (info.component[i] == TraceDofInfo::pressure ? pidx : uidx).push_back(i);
  if (pidx.empty()) throw DimensionError("split_saddle: no pressure unknowns");

  SaddleSystem s;
  s.perm = uidx;
  s.perm.insert(s.perm.end(), pidx.begin(), pidx.end());
  s.f = submatrix(k, uidx, uidx);
  s.b = submatrix(k, pidx, uidx);
  s.bt = transpose(s.b);
  const SparseMatrixCsr pp = submatrix(k, pidx, pidx);
  const SparseMatrixCsr up = submatrix(k, uidx, pidx);
  const double tol = 1e-10 * std::max(k.max_abs(), 1e-300);
  if (pp.max_abs() > tol)
    throw DimensionError("split_saddle: pressure-pressure block is not zero");
  for (const auto &e : up.to_triplets())
    if (std::abs(e.value + s.bt.at(e.row, e.col)) > tol)
      throw DimensionError("split_saddle: pressure column is not -B^T");
  for (const auto &e : s.bt.to_triplets())
    if (std::abs(e.value + up.at(e.row, e.col)) > tol)
      throw DimensionError("split_saddle: pressure column is not -B^T");

  s.rhs_u.reserve(uidx.size());
  for (Index i : uidx) {
    s.rhs_u.push_back(rhs[i]);
    s.u_node.push_back(info.node[i]);
    s.u_component.push_back(info.component[i]);
  }
  for (Index i : pidx) s.rhs_p.push_back(rhs[i]);
  return s;
}

bool has_constant_pressure_nullspace(const SparseMatrixCsr &bt) {
  const Vector ones(bt.ncols(), 1.0);
  const Vector v = spmv(bt, ones);
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst <= 1e-10 * std::max(bt.max_abs(), 1e-300);
}

namespace {

SparseMatrixCsr pin_first(const SparseMatrixCsr &a) {
  std::vector<Triplet> t;
  for (const auto &e : a.to_triplets())
    if (e.row != 0 && e.col != 0) t.push_back(e);
  t.push_back({0, 0, 1.0});
  return SparseMatrixCsr::from_triplets(a.nrows(), a.ncols(), std::move(t));
}

void check_sizes(std::span<const double> r, std::span<double> z, Index n, const char *who) {
  if (static_cast<Index>(r.size()) != n || static_cast<Index>(z.size()) != n)
    throw DimensionError(std::string(who) + ": dimension mismatch");
}

} // namespace

BfbtSchur::BfbtSchur(const SparseMatrixCsr &f, const SparseMatrixCsr &b,
                     const SparseMatrixCsr &bt, bool allow_pinning)
    : f_(&f), b_(&b), bt_(&bt) {
  if (f.nrows() != f.ncols() || b.ncols() != f.nrows() || bt.nrows() != b.ncols() ||
      bt.ncols() != b.nrows())
    throw DimensionError("bfbt: inconsistent block sizes");
  bbt_ = multiply(b, bt);
  pinned_ = allow_pinning && b.nrows() > 1 && has_constant_pressure_nullspace(bt);
  lu_ = sparse_lu_factor(pinned_ ? pin_first(bbt_) : bbt_);
}

void BfbtSchur::solve_bbt(std::span<double> v) const {
  if (pinned_) v[0] = 0.0;
  const Vector x = lu_->solve(v);
  std::copy(x.begin(), x.end(), v.begin());
}

void BfbtSchur::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, size(), "bfbt_apply");
  Vector t(r.begin(), r.end());
  solve_bbt(t);
  const Vector w = spmv(*bt_, t);
  const Vector fw = spmv(*f_, w);
  spmv(*b_, fw, z);
  solve_bbt(z);
}

Vector BfbtSchur::apply(std::span<const double> r) const {
  Vector z(r.size());
  apply(r, z);
  return z;
}

ExactSchurInverse::ExactSchurInverse(const SparseMatrixCsr &f, const SparseMatrixCsr &b,
                                     const SparseMatrixCsr &bt)
    : n_(b.nrows()), s_(b.nrows(), b.nrows()) {
  const SparseLuFactors flu = sparse_lu_factor(f);
  const SparseMatrixCsr btc = transpose(bt); // rows of btc are columns of B^T
  Vector col(f.nrows());
  for (Index j = 0; j < n_; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    for (Index k = btc.row_offsets()[j]; k < btc.row_offsets()[j + 1]; ++k)
      col[btc.col_indices()[k]] = btc.values()[k];
    const Vector x = flu.solve(col);
    const Vector sc = spmv(b, x);
    for (Index i = 0; i < n_; ++i) s_(i, j) = sc[i];
  }
  pinned_ = n_ > 1 && has_constant_pressure_nullspace(bt);
  DenseMatrix m = s_;
  if (pinned_) {
    for (Index i = 0; i < n_; ++i) m(0, i) = m(i, 0) = 0.0;
    m(0, 0) = 1.0;
  }
  lu_.emplace(std::move(m));
}

void ExactSchurInverse::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, n_, "exact_schur");
  std::copy(r.begin(), r.end(), z.begin());
  if (pinned_) z[0] = 0.0;
  lu_->solve_in_place(z);
}

IluRichardson::IluRichardson(const SparseMatrixCsr &a, Index steps)
    : a_(&a), ilu_(ilu0_factor(a)), steps_(steps) {
  if (steps < 1) throw std::invalid_argument("ilu richardson: steps must be >= 1");
}

void IluRichardson::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, size(), "ilu_richardson");
  ilu_.apply(r, z);
  Vector res(r.size()), dz(r.size());
  for (Index s = 1; s < steps_; ++s) {
    residual(*a_, z, r, res);
    ilu_.apply(res, dz);
    axpy(1.0, dz, z);
  }
}

namespace {

amg::AmgHierarchy nodal_hierarchy(const SaddleSystem &s, const amg::AmgConfig &cfg,
                                  std::vector<Index> &order) {
  const amg::NodalBlockLayout layout = s.nodal_layout(order);
  std::vector<Index> pos(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = static_cast<Index>(k);
  return amg::build_hierarchy(permute_symmetric(s.f, pos), layout, cfg);
}

} // namespace

NodalAmgInverse::NodalAmgInverse(const SaddleSystem &s, const amg::AmgConfig &cfg)
    : h_(nodal_hierarchy(s, cfg, order_)) {}

void NodalAmgInverse::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, size(), "amg");
  Vector rp(order_.size());
  for (std::size_t k = 0; k < order_.size(); ++k) rp[k] = r[order_[k]];
  const Vector zp = h_.vcycle(rp);
  for (std::size_t k = 0; k < order_.size(); ++k) z[order_[k]] = zp[k];
}

BlockPreconditioner::BlockPreconditioner(SparseMatrixCsr bt,
                                         std::shared_ptr<const krylov::Preconditioner> finv,
                                         std::shared_ptr<const krylov::Preconditioner> sinv)
    : bt_(std::move(bt)), finv_(std::move(finv)), sinv_(std::move(sinv)) {
  if (finv_->size() != bt_.nrows() || sinv_->size() != bt_.ncols())
    throw DimensionError("block preconditioner: sub-inverse sizes do not match B^T");
}

void BlockPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, size(), "block_precond_apply");
  const Index nu = bt_.nrows();
  const auto r_u = r.subspan(0, nu);
  const auto r_p = r.subspan(nu);
  auto y_u = z.subspan(0, nu);
  auto y_p = z.subspan(nu);
  sinv_->apply(r_p, y_p);
  Vector t = spmv(bt_, y_p);
  for (Index i = 0; i < nu; ++i) t[i] += r_u[i];
  finv_->apply(t, y_u);
}

void PermutedPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  check_sizes(r, z, size(), "permuted_precond");
  Vector rs(perm_.size()), zs(perm_.size());
  for (std::size_t s = 0; s < perm_.size(); ++s) rs[s] = r[perm_[s]];
  inner_->apply(rs, zs);
  for (std::size_t s = 0; s < perm_.size(); ++s) z[perm_[s]] = zs[s];
}

std::shared_ptr<krylov::Preconditioner> one_level_ilu0_baseline(const SparseMatrixCsr &k,
                                                                Index steps) {
  return std::make_shared<IluRichardson>(k, steps);
}

PreconditionerId parse_preconditioner_id(const std::string &name) {
  if (name == "dd-ilu0") return PreconditionerId::dd_ilu0;
  if (name == "bfbt-amg-ilu0") return PreconditionerId::bfbt_amg_ilu0;
  if (name == "bfbt-amg-gmres") return PreconditionerId::bfbt_amg_gmres;
  if (name == "ideal") return PreconditionerId::ideal;
  throw std::invalid_argument("unknown preconditioner '" + name + "'");
}

std::string to_string(PreconditionerId id) {
  switch (id) {
  case PreconditionerId::dd_ilu0: return "dd-ilu0";
  case PreconditionerId::bfbt_amg_ilu0: return "bfbt-amg-ilu0";
  case PreconditionerId::bfbt_amg_gmres: return "bfbt-amg-gmres";
  case PreconditionerId::ideal: return "ideal";
  }
  return "?";
}

Index default_max_iterations(PreconditionerId id) {
  return id == PreconditionerId::dd_ilu0 ? 1000 : 200;
}

TracePreconditioner make_trace_preconditioner(PreconditionerId id, const SparseMatrixCsr &k,
                                              std::span<const double> rhs,
                                              const TraceDofInfo &info,
                                              const amg::AmgConfig &amg_cfg, Index ilu_steps) {
  TracePreconditioner out;
  if (id == PreconditionerId::dd_ilu0) {
    out.m = one_level_ilu0_baseline(k, ilu_steps);
    return out;
  }
  auto saddle = std::make_shared<const SaddleSystem>(split_saddle(k, rhs, info));
  std::shared_ptr<const krylov::Preconditioner> finv, sinv;
  if (id == PreconditionerId::ideal) {
    finv = std::make_shared<LuInverse>(saddle->f);
    sinv = std::make_shared<ExactSchurInverse>(saddle->f, saddle->b, saddle->bt);
  } else {
    amg::AmgConfig cfg = amg_cfg;
    cfg.smoother.kind = id == PreconditionerId::bfbt_amg_ilu0 ? amg::SmootherKind::ilu0
                                                              : amg::SmootherKind::gmres_ilu0;
    auto amg = std::make_shared<const NodalAmgInverse>(*saddle, cfg);
    out.amg = amg;
    finv = amg;
    sinv = std::make_shared<BfbtSchur>(saddle->f, saddle->b, saddle->bt);
  }
  auto block = std::make_shared<BlockPreconditioner>(saddle->bt, finv, sinv);
  out.m = std::make_shared<PermutedPreconditioner>(saddle->perm, block);
  // Inner GMRES smoothing always gets the flexible outer solver, even when the
  // hierarchy degenerates to a single direct level.
  out.flexible = out.m->is_variable() || id == PreconditionerId::bfbt_amg_gmres;
  out.saddle = std::move(saddle);
  return out;
}

} // namespace mhdtrace::precond
