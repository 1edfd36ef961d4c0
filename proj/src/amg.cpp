#include "mhdtrace/amg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace mhdtrace::amg {

NodalBlockLayout NodalBlockLayout::uniform(Index nodes, Index dofs_per_node) {
  NodalBlockLayout l;
  l.dofs_per_node = dofs_per_node;
  l.node_offsets.resize(nodes + 1);
  l.components.resize(nodes * dofs_per_node);
  for (Index n = 0; n <= nodes; ++n) l.node_offsets[n] = n * dofs_per_node;
  for (Index d = 0; d < nodes * dofs_per_node; ++d)
    l.components[d] = static_cast<int>(d % dofs_per_node);
  return l;
}

void NodalBlockLayout::validate() const {
  if (node_offsets.empty() || node_offsets.front() != 0)
    throw DimensionError("layout: node_offsets must start at 0");
  if (static_cast<Index>(components.size()) != dof_count())
    throw DimensionError("layout: one component id per dof required");
  for (Index n = 0; n < node_count(); ++n) {
    if (node_offsets[n + 1] < node_offsets[n])
      throw DimensionError("layout: node_offsets must be nondecreasing");
    for (Index d = node_offsets[n]; d < node_offsets[n + 1]; ++d) {
      if (components[d] < 0 || components[d] >= dofs_per_node)
        throw DimensionError("layout: component id out of range");
      if (d > node_offsets[n] && components[d] <= components[d - 1])
        throw DimensionError("layout: components within a node must increase");
    }
  }
}

Aggregates aggregate(const std::vector<std::vector<Index>> &graph,
                     std::span<const Index> seed_order) {
  const Index n = static_cast<Index>(graph.size());
  if (n == 0) throw std::invalid_argument("aggregate: empty graph");
  if (static_cast<Index>(seed_order.size()) != n)
    throw std::invalid_argument("aggregate: seed order must list every node");
  Aggregates agg;
  agg.node_to_aggregate.assign(n, -1);
  std::vector<Index> singletons;
  for (Index root : seed_order) {
    if (agg.node_to_aggregate[root] >= 0) continue;
    const Index id = agg.count++;
    agg.node_to_aggregate[root] = id;
    bool grew = false;
    for (Index nb : graph[root])
      if (agg.node_to_aggregate[nb] < 0) {
        agg.node_to_aggregate[nb] = id;
        grew = true;
      }
    if (!grew) singletons.push_back(root);
  }
  // Merge lone roots into a neighboring aggregate, then renumber densely.
  std::vector<char> dropped(agg.count, 0);
  for (Index s : singletons) {
    for (Index nb : graph[s]) {
      const Index target = agg.node_to_aggregate[nb];
      if (target != agg.node_to_aggregate[s]) {
        dropped[agg.node_to_aggregate[s]] = 1;
        agg.node_to_aggregate[s] = target;
        break;
      }
    }
  }
  std::vector<Index> renumber(agg.count, -1);
  Index next = 0;
  for (Index id = 0; id < agg.count; ++id)
    if (!dropped[id]) renumber[id] = next++;
  for (auto &a : agg.node_to_aggregate) a = renumber[a];
  agg.count = next;
  return agg;
}

std::vector<std::vector<Index>> node_graph(const SparseMatrixCsr &a,
                                           const NodalBlockLayout &layout) {
  const Index nodes = layout.node_count();
  std::vector<Index> dof_node(layout.dof_count());
  for (Index n = 0; n < nodes; ++n)
    for (Index d = layout.node_offsets[n]; d < layout.node_offsets[n + 1]; ++d)
      dof_node[d] = n;
  std::vector<std::vector<Index>> g(nodes);
  for (Index i = 0; i < a.nrows(); ++i) {
    const Index ni = dof_node[i];
    for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const Index nj = dof_node[a.col_indices()[k]];
      if (ni == nj) continue;
      g[ni].push_back(nj);
      g[nj].push_back(ni);
    }
  }
  for (auto &nb : g) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

SmootherKind parse_smoother_kind(const std::string &name) {
  if (name == "jacobi") return SmootherKind::jacobi;
  if (name == "gauss-seidel") return SmootherKind::gauss_seidel;
  if (name == "chebyshev") return SmootherKind::chebyshev;
  if (name == "ilu0") return SmootherKind::ilu0;
  if (name == "gmres-ilu0") return SmootherKind::gmres_ilu0;
  throw std::invalid_argument("unknown smoother kind '" + name + "'");
}

std::string to_string(SmootherKind kind) {
  switch (kind) {
  case SmootherKind::jacobi: return "jacobi";
  case SmootherKind::gauss_seidel: return "gauss-seidel";
  case SmootherKind::chebyshev: return "chebyshev";
  case SmootherKind::ilu0: return "ilu0";
  case SmootherKind::gmres_ilu0: return "gmres-ilu0";
  }
  return "?";
}

namespace {

class IluPreconditioner final : public krylov::Preconditioner {
public:
  explicit IluPreconditioner(const Ilu0Factors &f) : f_(&f) {}
  Index size() const override { return f_->size(); }
  void apply(std::span<const double> r, std::span<double> z) const override { f_->apply(r, z); }

private:
  const Ilu0Factors *f_;
};

} // namespace

Smoother::Smoother(const SparseMatrixCsr &a, const SmootherConfig &cfg)
    : a_(&a), cfg_(cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("smoother: steps must be >= 1");
  const Index n = a.nrows();
  switch (cfg.kind) {
  case SmootherKind::jacobi:
  case SmootherKind::gauss_seidel:
  case SmootherKind::chebyshev: {
    inv_diag_.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double d = a.at(i, i);
      if (d == 0.0)
        throw SingularMatrixError("smoother: zero diagonal at row " + std::to_string(i), i);
      inv_diag_[i] = 1.0 / d;
    }
    if (cfg.kind == SmootherKind::chebyshev) {
      // Power iteration on D^{-1} A from a fixed start vector.
      Vector v(n), w(n);
      for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
      double est = 0.0;
      for (Index it = 0; it < std::max<Index>(cfg.power_iterations, 1); ++it) {
        const double vn = norm2(v);
        for (double &x : v) x /= vn;
        spmv(a, v, w);
        for (Index i = 0; i < n; ++i) w[i] *= inv_diag_[i];
        est = norm2(w);
        v.swap(w);
      }
      lambda_max_ = est > 0.0 ? est : 1.0;
    }
    break;
  }
  case SmootherKind::ilu0:
  case SmootherKind::gmres_ilu0:
    ilu_ = ilu0_factor(a);
    break;
  }
}

void Smoother::smooth(std::span<const double> b, std::span<double> x,
                      Index steps) const {
  const SparseMatrixCsr &a = *a_;
  const Index n = a.nrows();
  Vector r(n), z(n);
  switch (cfg_.kind) {
  case SmootherKind::jacobi:
    for (Index s = 0; s < steps; ++s) {
      residual(a, x, b, r);
      for (Index i = 0; i < n; ++i) x[i] += cfg_.jacobi_damping * inv_diag_[i] * r[i];
    }
    break;
  case SmootherKind::gauss_seidel: {
    const auto &off = a.row_offsets();
    const auto &col = a.col_indices();
    const auto &val = a.values();
    for (Index s = 0; s < steps; ++s)
      for (Index i = 0; i < n; ++i) {
        double acc = b[i];
        for (Index k = off[i]; k < off[i + 1]; ++k)
          if (col[k] != i) acc -= val[k] * x[col[k]];
        x[i] = acc * inv_diag_[i];
      }
    break;
  }
  case SmootherKind::chebyshev: {
    const double lmax = lambda_max_;
    const double lmin = lmax / cfg_.chebyshev_ratio;
    const double theta = 0.5 * (lmax + lmin);
    const double delta = 0.5 * (lmax - lmin);
    const double sigma = theta / delta;
    double rho = 1.0 / sigma;
    Vector d(n);
    residual(a, x, b, r);
    for (Index i = 0; i < n; ++i) d[i] = inv_diag_[i] * r[i] / theta;
    for (Index s = 0; s < steps; ++s) {
      axpy(1.0, d, x);
      if (s + 1 == steps) break;
      residual(a, x, b, r);
      const double rho_next = 1.0 / (2.0 * sigma - rho);
      for (Index i = 0; i < n; ++i)
        d[i] = rho_next * rho * d[i] + 2.0 * rho_next / delta * inv_diag_[i] * r[i];
      rho = rho_next;
    }
    break;
  }
  case SmootherKind::ilu0:
    for (Index s = 0; s < steps; ++s) {
      residual(a, x, b, r);
      ilu_->apply(r, z);
      axpy(1.0, z, x);
    }
    break;
  case SmootherKind::gmres_ilu0: {
    residual(a, x, b, r);
    krylov::MatrixOperator op(a);
    IluPreconditioner prec(*ilu_);
    krylov::SolverOptions o;
    o.tolerance = 0.0;
    o.tolerance_is_relative = false;
    o.max_iterations = steps;
    const auto res = krylov::gmres(op, prec, r, o);
    axpy(1.0, res.x, x);
    break;
  }
  }
}

Vector smooth(const SmootherConfig &cfg, const SparseMatrixCsr &a,
              std::span<const double> x0, std::span<const double> b) {
  if (static_cast<Index>(x0.size()) != a.ncols() || static_cast<Index>(b.size()) != a.nrows())
    throw DimensionError("smooth: dimension mismatch");
  Smoother s(a, cfg);
  Vector x(x0.begin(), x0.end());
  s.smooth(b, x, cfg.steps);
  return x;
}

namespace {

// Tentative prolongator: fine dof (node, component) -> coarse dof
// (aggregate, component). Coarse nodes carry the union of their members'
// components.
void tentative_prolongator(const NodalBlockLayout &fine, const Aggregates &agg,
                           SparseMatrixCsr &p, NodalBlockLayout &coarse) {
  const Index ncomp = fine.dofs_per_node;
  std::vector<std::vector<char>> present(agg.count, std::vector<char>(ncomp, 0));
  for (Index n = 0; n < fine.node_count(); ++n)
    for (Index d = fine.node_offsets[n]; d < fine.node_offsets[n + 1]; ++d)
      present[agg.node_to_aggregate[n]][fine.components[d]] = 1;
  coarse = NodalBlockLayout{};
  coarse.dofs_per_node = ncomp;
  std::vector<std::vector<Index>> slot(agg.count, std::vector<Index>(ncomp, -1));
  Index next = 0;
  for (Index a = 0; a < agg.count; ++a) {
    for (Index c = 0; c < ncomp; ++c)
      if (present[a][c]) {
        slot[a][c] = next++;
        coarse.components.push_back(static_cast<int>(c));
      }
    coarse.node_offsets.push_back(next);
  }
  std::vector<Triplet> t;
  t.reserve(fine.dof_count());
  for (Index n = 0; n < fine.node_count(); ++n)
    for (Index d = fine.node_offsets[n]; d < fine.node_offsets[n + 1]; ++d)
      t.push_back({d, slot[agg.node_to_aggregate[n]][fine.components[d]], 1.0});
  p = SparseMatrixCsr::from_triplets(fine.dof_count(), next, std::move(t));
}

} // namespace

AmgHierarchy build_hierarchy(const SparseMatrixCsr &f, const NodalBlockLayout &layout,
                             const AmgConfig &cfg) {
  layout.validate();
  if (f.nrows() != f.ncols() || f.nrows() != layout.dof_count())
    throw DimensionError("build_hierarchy: operator size must match layout dof count");
  AmgHierarchy h;
  h.cfg_ = cfg;
  h.levels_.reserve(std::max<Index>(cfg.max_levels, 1));
  h.levels_.push_back(Level{f, layout, {}, {}, {}, nullptr});
  while (true) {
    Level &cur = h.levels_.back();
    const Index nodes = cur.layout.node_count();
    if (nodes <= cfg.coarse_threshold ||
        static_cast<Index>(h.levels_.size()) >= cfg.max_levels)
      break;
    const auto graph = node_graph(cur.a, cur.layout);
    std::vector<Index> seeds(nodes);
    for (Index i = 0; i < nodes; ++i) seeds[i] = i;
    Aggregates agg = aggregate(graph, seeds);
    if (agg.count >= nodes) break;
    Level next;
    tentative_prolongator(cur.layout, agg, cur.p, next.layout);
    cur.pt = transpose(cur.p);
    cur.aggregates = std::move(agg);
    next.a = multiply(cur.pt, multiply(cur.a, cur.p));
    h.levels_.push_back(std::move(next));
  }
  for (std::size_t l = 0; l + 1 < h.levels_.size(); ++l)
    h.levels_[l].smoother = std::make_unique<Smoother>(h.levels_[l].a, cfg.smoother);
  h.coarse_ = sparse_lu_factor(h.levels_.back().a);
  return h;
}

bool AmgHierarchy::is_variable() const {
  return levels_.size() > 1 && cfg_.smoother.kind == SmootherKind::gmres_ilu0;
}

double AmgHierarchy::operator_complexity() const {
  double total = 0.0;
  for (const auto &l : levels_) total += static_cast<double>(l.a.nnz());
  return total / static_cast<double>(levels_.front().a.nnz());
}

void AmgHierarchy::cycle(Index l, std::span<const double> b, std::span<double> x) const {
  const Level &lev = levels_[l];
  if (l + 1 == level_count()) {
    coarse_->solve(b, x);
    return;
  }
  std::fill(x.begin(), x.end(), 0.0);
  if (cfg_.pre_smoothing > 0) lev.smoother->smooth(b, x, cfg_.pre_smoothing);
  Vector r(lev.a.nrows());
  residual(lev.a, x, b, r);
  Vector rc = spmv(lev.pt, r);
  Vector ec(rc.size());
  cycle(l + 1, rc, ec);
  Vector e = spmv(lev.p, ec);
  axpy(1.0, e, x);
  if (cfg_.post_smoothing > 0) lev.smoother->smooth(b, x, cfg_.post_smoothing);
}

void AmgHierarchy::vcycle(std::span<const double> r, std::span<double> z) const {
  if (static_cast<Index>(r.size()) != size() || static_cast<Index>(z.size()) != size())
    throw DimensionError("vcycle: dimension mismatch");
  cycle(0, r, z);
}

Vector AmgHierarchy::vcycle(std::span<const double> r) const {
  Vector z(r.size());
  vcycle(r, z);
  return z;
}

void AmgHierarchy::print_summary(std::ostream &os) const {
  os << "level  nodes     dofs        nnz  nnz/nnz0\n";
  const double nnz0 = static_cast<double>(levels_.front().a.nnz());
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const auto &lev = levels_[l];
    os << std::setw(5) << l << std::setw(7) << lev.layout.node_count() << std::setw(9)
       << lev.a.nrows() << std::setw(11) << lev.a.nnz() << std::setw(10)
       << std::setprecision(4) << static_cast<double>(lev.a.nnz()) / nnz0 << '\n';
  }
  os << "operator complexity " << std::setprecision(4) << operator_complexity() << '\n';
}

} // namespace mhdtrace::amg
