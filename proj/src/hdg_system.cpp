#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "hdg_detail.hpp"
#include "mhdtrace/factorization.hpp"
#include "mhdtrace/hdg.hpp"

namespace mhdtrace::hdg {

namespace {

std::vector<Index> element_trace_dofs(const QuadMesh &mesh, const TraceLayout &layout, Index k) {
  const int N = layout.p + 1;
  std::vector<Index> dofs(static_cast<std::size_t>(local_trace_size(layout.p)));
  for (int side = 0; side < 4; ++side) {
    const Index e = mesh.element_edges[k][side];
    for (int m = 0; m < N; ++m) {
      const Index base = (static_cast<Index>(side) * N + m) * 4;
      dofs[base + 0] = layout.velocity(e, m, 0);
      dofs[base + 1] = layout.velocity(e, m, 1);
      dofs[base + 2] = layout.tangential_b(e, m);
      dofs[base + 3] = layout.multiplier(e, m);
    }
  }
  dofs.back() = layout.pressure(k);
  return dofs;
}

LocalInputs local_inputs(const QuadMesh &mesh, const AssemblyInputs &in, Index k, int n) {
  LocalInputs li;
  li.box = mesh.element_box(k);
  if (in.picard) {
    li.w = std::span<const double>(in.picard->field(k, c_ux).data(), 2 * n);
    li.d = std::span<const double>(in.picard->field(k, c_bx).data(), 2 * n);
  }
  if (in.dt > 0.0) {
    if (!in.previous) throw std::invalid_argument("assemble_trace_system: transient step needs previous state");
    li.inv_dt = 1.0 / in.dt;
    li.u_prev = std::span<const double>(in.previous->field(k, c_ux).data(), 2 * n);
    li.b_prev = std::span<const double>(in.previous->field(k, c_bx).data(), 2 * n);
  }
  li.f = in.f;
  li.g = in.g;
  return li;
}

/// Two-sided average of a frozen nodal vector field on every element side,
/// [k][((side * nq) + q) * 2 + i]. Both neighbours share the quadrature
/// points of an edge, so the average is single valued.
std::vector<Vector> face_average(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s, int c) {
  const int n = basis.volume_size();
  const auto tab = detail::tabulate(basis, {0.0, 1.0, 0.0, 1.0});
  const int nq = tab.sides[0].nq;
  std::vector<Vector> own(mesh.element_count(), Vector(static_cast<std::size_t>(8 * nq), 0.0));
  for (Index k = 0; k < mesh.element_count(); ++k)
    for (int side = 0; side < 4; ++side)
      for (int q = 0; q < nq; ++q)
        for (int i = 0; i < 2; ++i)
          own[k][(side * nq + q) * 2 + i] = detail::eval(tab.sides[side].phi, n, q, s.field(k, c + i).data());
  std::vector<Vector> avg = own;
  for (Index e = 0; e < mesh.edge_count(); ++e) {
    const auto &[a, b] = mesh.edge_sides[e];
    if (b.element < 0) continue;
    for (int j = 0; j < 2 * nq; ++j) {
      const double v = 0.5 * (own[a.element][a.side * 2 * nq + j] + own[b.element][b.side * 2 * nq + j]);
      avg[a.element][a.side * 2 * nq + j] = v;
      avg[b.element][b.side * 2 * nq + j] = v;
    }
  }
  return avg;
}

struct FrozenFaces {
  std::vector<Vector> w, d;
  FrozenFaces(const QuadMesh &mesh, const BasisP &basis, const AssemblyInputs &in) {
    if (!in.picard) return;
    w = face_average(mesh, basis, *in.picard, c_ux);
    d = face_average(mesh, basis, *in.picard, c_bx);
  }
  LocalInputs inputs(const QuadMesh &mesh, const AssemblyInputs &in, Index k, int n) const {
    LocalInputs li = local_inputs(mesh, in, k, n);
    for (int side = 0; side < 4; ++side) {
      const int b = mesh.edge_boundary[mesh.element_edges[k][side]];
      li.fluid_traction_only[side] = b >= 0 && in.mirror_sides[b];
    }
    if (!w.empty()) {
      li.face_w = w[k];
      li.face_d = d[k];
    }
    return li;
  }
};

void check_state(const VolumeState *s, const QuadMesh &mesh, int p, const char *what) {
  if (s && (s->elements != mesh.element_count() || s->p != p))
    throw DimensionError(std::string("assemble_trace_system: ") + what + " does not match the mesh");
}

} // namespace

TraceSystem assemble_trace_system(const QuadMesh &mesh, const BasisP &basis, const MhdParams &params,
                                  const AssemblyInputs &in) {
  params.validate();
  check_state(in.picard, mesh, basis.p, "picard state");
  check_state(in.previous, mesh, basis.p, "previous state");
  const int n = basis.volume_size();
  TraceSystem sys;
  sys.p = basis.p;
  sys.layout = {mesh.edge_count(), mesh.element_count(), basis.p};
  const Index nt = local_trace_size(basis.p);
  const Index rho = nt - 1;
  sys.rhs.assign(sys.layout.size(), 0.0);
  sys.element_dofs.resize(mesh.element_count());
  sys.recon.resize(mesh.element_count());
  sys.shift.resize(mesh.element_count());
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count() * nt * nt));

  const FrozenFaces faces(mesh, basis, in);
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const LocalSystem local = assemble_local(basis, params, faces.inputs(mesh, in, k, n));
    CondensedElement ce = static_condense(local);
    // A constant shift of q and rho together solves the homogeneous local
    // problem, so the rho column is exact.
    for (Index a = 0; a < ce.recon.nrows(); ++a)
      ce.recon(a, rho) = (a / n == c_q) ? -1.0 : 0.0;
    for (Index i = 0; i < nt; ++i) {
      const bool velocity = i < rho && (i % 4) < 2;
      ce.k(i, rho) = velocity ? -local.h(rho, i) : 0.0;
    }
    auto dofs = element_trace_dofs(mesh, sys.layout, k);
    for (Index i = 0; i < nt; ++i) {
      sys.rhs[dofs[i]] += ce.rhs[i];
      for (Index j = 0; j < nt; ++j) {
        const double v = ce.k(i, j);
        if (v != 0.0 || (i == rho && j == rho)) trip.push_back({dofs[i], dofs[j], v});
      }
    }
    sys.element_dofs[k] = std::move(dofs);
    sys.recon[k] = std::move(ce.recon);
    sys.shift[k] = std::move(ce.shift);
  }
  sys.k = SparseMatrixCsr::from_triplets(sys.layout.size(), sys.layout.size(), std::move(trip));
  return sys;
}

Vector ReducedSystem::expand(std::span<const double> reduced) const {
  if (static_cast<Index>(reduced.size()) != static_cast<Index>(free.size()))
    throw DimensionError("ReducedSystem::expand: length mismatch");
  Vector full = fixed;
  for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = reduced[i];
  return full;
}

Vector ReducedSystem::restrict_to_free(std::span<const double> full) const {
  if (static_cast<Index>(full.size()) != full_size)
    throw DimensionError("ReducedSystem::restrict_to_free: length mismatch");
  Vector r(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) r[i] = full[free[i]];
  return r;
}

ReducedSystem apply_boundary_conditions(const TraceSystem &sys, const QuadMesh &mesh,
                                        const BasisP &basis, const BoundarySpec &spec) {
  const auto &layout = sys.layout;
  if (layout.edges != mesh.edge_count() || layout.p != basis.p)
    throw DimensionError("apply_boundary_conditions: system does not match mesh");
  const bool px = spec.sides[1].kind == BoundaryKind::periodic || spec.sides[3].kind == BoundaryKind::periodic;
  const bool py = spec.sides[0].kind == BoundaryKind::periodic || spec.sides[2].kind == BoundaryKind::periodic;
  if ((spec.sides[1].kind == BoundaryKind::periodic) != (spec.sides[3].kind == BoundaryKind::periodic) ||
      (spec.sides[0].kind == BoundaryKind::periodic) != (spec.sides[2].kind == BoundaryKind::periodic) ||
      px != mesh.periodic_x || py != mesh.periodic_y)
    throw std::invalid_argument("apply_boundary_conditions: periodic sides disagree with the mesh pairing");

  const int N = basis.nodes_1d();
  const Index total = layout.size();
  std::vector<char> is_fixed(total, 0);
  Vector fixed(total, 0.0);

  // Edge L2 projection of a scalar function.
  auto project_edge = [&](const detail::SideTable &st, const std::function<double(double, double)> &fn) {
    DenseMatrix mass(N, N);
    Vector rhs(N, 0.0);
    for (int q = 0; q < st.nq; ++q) {
      const double v = fn(st.x[q], st.y[q]);
      for (int m = 0; m < N; ++m) {
        rhs[m] += st.weight[q] * st.psi[q * N + m] * v;
        for (int m2 = 0; m2 < N; ++m2) mass(m, m2) += st.weight[q] * st.psi[q * N + m] * st.psi[q * N + m2];
      }
    }
    DenseLu(mass).solve_in_place(rhs);
    return rhs;
  };

  double flux = 0.0, dirichlet_length = 0.0;
  std::vector<std::pair<Index, std::array<double, 2>>> dirichlet_edges;
  for (Index e = 0; e < mesh.edge_count(); ++e) {
    const int bside = mesh.edge_boundary[e];
    if (bside < 0) continue;
    const auto &cond = spec.sides[bside];
    const auto es = mesh.edge_sides[e][0];
    const auto tab = detail::tabulate(basis, mesh.element_box(es.element));
    const auto &st = tab.sides[es.side];
    const std::array<double, 2> edge_dir = mesh.edge_horizontal[e] ? std::array<double, 2>{1.0, 0.0}
                                                                    : std::array<double, 2>{0.0, 1.0};
    auto fix = [&](Index dof, double v) {
      is_fixed[dof] = 1;
      fixed[dof] = v;
    };
    auto fix_tangential = [&]() {
      if (!cond.magnetic) throw std::invalid_argument("apply_boundary_conditions: missing magnetic data");
      const auto bt = project_edge(st, [&](double x, double y) {
        const auto b = cond.magnetic(x, y);
        return b[0] * edge_dir[0] + b[1] * edge_dir[1];
      });
      for (int m = 0; m < N; ++m) fix(layout.tangential_b(e, m), bt[m]);
    };
    switch (cond.kind) {
    case BoundaryKind::periodic:
      throw std::invalid_argument("apply_boundary_conditions: boundary edge on a periodic side");
    case BoundaryKind::dirichlet: {
      if (!cond.velocity) throw std::invalid_argument("apply_boundary_conditions: missing velocity data");
      for (int i = 0; i < 2; ++i) {
        const auto ui = project_edge(st, [&](double x, double y) { return cond.velocity(x, y)[i]; });
        for (int m = 0; m < N; ++m) fix(layout.velocity(e, m, i), ui[m]);
      }
      fix_tangential();
      for (int m = 0; m < N; ++m) fix(layout.multiplier(e, m), 0.0);
      for (int q = 0; q < st.nq; ++q)
        for (int m = 0; m < N; ++m) {
          double un = 0.0;
          for (int i = 0; i < 2; ++i) un += fixed[layout.velocity(e, m, i)] * st.normal[i];
          flux += st.weight[q] * st.psi[q * N + m] * un;
        }
      dirichlet_length += st.length;
      dirichlet_edges.push_back({e, st.normal});
      break;
    }
    case BoundaryKind::mirror_conductor: {
      const int normal_comp = mesh.edge_horizontal[e] ? 1 : 0;
      for (int m = 0; m < N; ++m) {
        fix(layout.velocity(e, m, normal_comp), 0.0);
        fix(layout.multiplier(e, m), 0.0);
      }
      if (cond.fix_tangential_b) fix_tangential();
      break;
    }
    }
  }
  // Make the imposed velocity satisfy the global incompressibility constraint.
  if (dirichlet_length > 0.0) {
    const double c = flux / dirichlet_length;
    for (const auto &[e, nrm] : dirichlet_edges)
      for (int m = 0; m < N; ++m)
        for (int i = 0; i < 2; ++i) fixed[layout.velocity(e, m, i)] -= c * nrm[i];
  }

  ReducedSystem out;
  out.full_size = total;
  out.fixed = std::move(fixed);
  std::vector<Index> map(total, -1);
  for (Index i = 0; i < total; ++i)
    if (!is_fixed[i]) {
      map[i] = static_cast<Index>(out.free.size());
      out.free.push_back(i);
    }
  const Index nf = static_cast<Index>(out.free.size());
  const auto full_info = layout.dof_info();
  out.info.node.resize(nf);
  out.info.component.resize(nf);
  out.rhs.resize(nf);
  std::vector<Triplet> trip;
  const auto &rp = sys.k.row_offsets();
  const auto &ci = sys.k.col_indices();
  const auto &vals = sys.k.values();
  for (Index r = 0; r < nf; ++r) {
    const Index i = out.free[r];
    out.info.node[r] = full_info.node[i];
    out.info.component[r] = full_info.component[i];
    double b = sys.rhs[i];
    for (Index p = rp[i]; p < rp[i + 1]; ++p) {
      const Index j = ci[p];
      if (map[j] >= 0)
        trip.push_back({r, map[j], vals[p]});
      else
        b -= vals[p] * out.fixed[j];
    }
    out.rhs[r] = b;
  }
  out.k = SparseMatrixCsr::from_triplets(nf, nf, std::move(trip));
  return out;
}

Vector element_velocity_flux(const QuadMesh &mesh, const BasisP &basis, std::span<const double> trace) {
  const TraceLayout layout{mesh.edge_count(), mesh.element_count(), basis.p};
  if (static_cast<Index>(trace.size()) != layout.size())
    throw DimensionError("element_velocity_flux: trace length mismatch");
  const int N = basis.nodes_1d();
  std::vector<double> psi_int(N, 0.0); // integral of psi_m over [-1, 1]
  for (int q = 0; q < basis.quad_1d(); ++q)
    for (int m = 0; m < N; ++m) psi_int[m] += basis.quad.weights[q] * basis.value(q, m);
  Vector flux(mesh.element_count(), 0.0);
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto box = mesh.element_box(k);
    for (int side = 0; side < 4; ++side) {
      const Index e = mesh.element_edges[k][side];
      const auto nrm = side_normal(side);
      const double half = 0.5 * ((side % 2 == 0) ? box[1] - box[0] : box[3] - box[2]);
      for (int m = 0; m < N; ++m)
        for (int i = 0; i < 2; ++i) flux[k] += half * psi_int[m] * nrm[i] * trace[layout.velocity(e, m, i)];
    }
  }
  return flux;
}

void project_velocity_constraint(const ReducedSystem &reduced, std::span<double> x) {
  const Index nf = static_cast<Index>(reduced.free.size());
  if (static_cast<Index>(x.size()) != nf) throw DimensionError("project_velocity_constraint: length mismatch");
  std::vector<Index> prow, vcols, vmap(nf, -1);
  for (Index i = 0; i < nf; ++i) {
    const int c = reduced.info.component[i];
    if (c == precond::TraceDofInfo::pressure) prow.push_back(i);
    if (c == 0 || c == 1) {
      vmap[i] = static_cast<Index>(vcols.size());
      vcols.push_back(i);
    }
  }
  if (prow.empty()) return;
  const Index np = static_cast<Index>(prow.size());
  const auto &rp = reduced.k.row_offsets();
  const auto &ci = reduced.k.col_indices();
  const auto &vals = reduced.k.values();
  std::vector<Triplet> dt;
  Vector resid(np, 0.0);
  for (Index r = 0; r < np; ++r) {
    const Index i = prow[r];
    double s = -reduced.rhs[i];
    for (Index p = rp[i]; p < rp[i + 1]; ++p) {
      const Index j = ci[p];
      if (vmap[j] < 0) continue;
      dt.push_back({r, vmap[j], vals[p]});
      s += vals[p] * x[j];
    }
    resid[r] = s;
  }
  const auto d = SparseMatrixCsr::from_triplets(np, static_cast<Index>(vcols.size()), std::move(dt));
  const auto dtr = transpose(d);
  auto ddt = multiply(d, dtr);
  if (precond::has_constant_pressure_nullspace(dtr)) {
    auto tr = ddt.to_triplets();
    std::erase_if(tr, [](const Triplet &t) { return t.row == 0 || t.col == 0; });
    tr.push_back({0, 0, 1.0});
    ddt = SparseMatrixCsr::from_triplets(np, np, std::move(tr));
    resid[0] = 0.0;
  }
  const auto lu = sparse_lu_factor(ddt, 0.1);
  const Vector z = lu.solve(resid);
  const Vector corr = spmv(dtr, z);
  for (std::size_t c = 0; c < vcols.size(); ++c) x[vcols[c]] -= corr[c];
}

double integrate_component(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s, int c) {
  const int n = basis.volume_size();
  double total = 0.0;
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto tab = detail::tabulate(basis, mesh.element_box(k));
    const auto coeffs = s.field(k, c);
    for (int q = 0; q < tab.volume.nq; ++q)
      total += tab.volume.weight[q] * detail::eval(tab.volume.phi, n, q, coeffs.data());
  }
  return total;
}

VolumeState reconstruct_volume(const TraceSystem &sys, const QuadMesh &mesh, const BasisP &basis,
                               std::span<double> trace) {
  if (static_cast<Index>(trace.size()) != sys.layout.size())
    throw DimensionError("reconstruct_volume: trace length mismatch");
  VolumeState s(mesh.element_count(), basis.p);
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto &dofs = sys.element_dofs[k];
    Vector lam(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) lam[i] = trace[dofs[i]];
    const Vector rl = sys.recon[k] * std::span<const double>(lam);
    auto v = s.element(k);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = sys.shift[k][a] - rl[a];
  }
  const double mean = integrate_component(mesh, basis, s, c_q) / mesh.area();
  for (Index k = 0; k < mesh.element_count(); ++k) {
    for (double &v : s.field(k, c_q)) v -= mean;
    trace[sys.layout.pressure(k)] -= mean;
  }
  return s;
}

double local_residual(const QuadMesh &mesh, const BasisP &basis, const MhdParams &params,
                      const AssemblyInputs &in, const VolumeState &state, std::span<const double> trace) {
  const TraceLayout layout{mesh.edge_count(), mesh.element_count(), basis.p};
  const int n = basis.volume_size();
  double worst = 0.0;
  const FrozenFaces faces(mesh, basis, in);
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto local = assemble_local(basis, params, faces.inputs(mesh, in, k, n));
    const auto dofs = element_trace_dofs(mesh, layout, k);
    Vector lam(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) lam[i] = trace[dofs[i]];
    const auto v = state.element(k);
    const Vector mv = local.m * v;
    const Vector cl = local.c * std::span<const double>(lam);
    double scale = 1.0;
    for (double f : local.f) scale = std::max(scale, std::abs(f));
    for (std::size_t i = 0; i < mv.size(); ++i)
      worst = std::max(worst, std::abs(mv[i] + cl[i] - local.f[i]) / scale);
  }
  return worst;
}

VolumeState project_fields(const QuadMesh &mesh, const BasisP &basis, const ExactFields &exact) {
  const int n = basis.volume_size();
  VolumeState s(mesh.element_count(), basis.p);
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto tab = detail::tabulate(basis, mesh.element_box(k));
    const auto &vt = tab.volume;
    DenseMatrix mass(n, n);
    DenseMatrix rhs(n, kVolumeComponents);
    for (int q = 0; q < vt.nq; ++q) {
      const double W = vt.weight[q], x = vt.x[q], y = vt.y[q];
      std::array<double, kVolumeComponents> val{};
      if (exact.l) {
        const auto l = exact.l(x, y);
        for (int c = 0; c < 4; ++c) val[c] = l[c];
      }
      if (exact.u) {
        const auto u = exact.u(x, y);
        val[c_ux] = u[0];
        val[c_uy] = u[1];
      }
      if (exact.q) val[c_q] = exact.q(x, y);
      if (exact.j) val[c_j] = exact.j(x, y);
      if (exact.b) {
        const auto b = exact.b(x, y);
        val[c_bx] = b[0];
        val[c_by] = b[1];
      }
      if (exact.r) val[c_r] = exact.r(x, y);
      for (int a = 0; a < n; ++a) {
        const double pa = vt.phi[q * n + a];
        for (int b = 0; b < n; ++b) mass(a, b) += W * pa * vt.phi[q * n + b];
        for (int c = 0; c < kVolumeComponents; ++c) rhs(a, c) += W * pa * val[c];
      }
    }
    const DenseMatrix coef = DenseLu(mass).solve(rhs);
    for (int c = 0; c < kVolumeComponents; ++c) {
      auto f = s.field(k, c);
      for (int a = 0; a < n; ++a) f[a] = coef(a, c);
    }
  }
  return s;
}

FieldErrors compute_errors(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s,
                           const ExactFields &exact, int extra) {
  const BasisP fine = make_basis(basis.p, basis.quad_1d() + std::max(0, extra));
  const int n = fine.volume_size();
  std::array<double, kVolumeComponents> sq{};
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto tab = detail::tabulate(fine, mesh.element_box(k));
    const auto &vt = tab.volume;
    for (int q = 0; q < vt.nq; ++q) {
      const double x = vt.x[q], y = vt.y[q];
      std::array<double, kVolumeComponents> ex{};
      if (exact.l) {
        const auto l = exact.l(x, y);
        for (int c = 0; c < 4; ++c) ex[c] = l[c];
      }
      if (exact.u) {
        const auto u = exact.u(x, y);
        ex[c_ux] = u[0];
        ex[c_uy] = u[1];
      }
      if (exact.q) ex[c_q] = exact.q(x, y);
      if (exact.j) ex[c_j] = exact.j(x, y);
      if (exact.b) {
        const auto b = exact.b(x, y);
        ex[c_bx] = b[0];
        ex[c_by] = b[1];
      }
      if (exact.r) ex[c_r] = exact.r(x, y);
      for (int c = 0; c < kVolumeComponents; ++c) {
        const double diff = detail::eval(vt.phi, n, q, s.field(k, c).data()) - ex[c];
        sq[c] += vt.weight[q] * diff * diff;
      }
    }
  }
  FieldErrors e;
  e.l = std::sqrt(sq[0] + sq[1] + sq[2] + sq[3]);
  e.u = std::sqrt(sq[c_ux] + sq[c_uy]);
  e.q = std::sqrt(sq[c_q]);
  e.j = std::sqrt(sq[c_j]);
  e.b = std::sqrt(sq[c_bx] + sq[c_by]);
  e.r = std::sqrt(sq[c_r]);
  return e;
}

double l2_norm(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s, int c, int count) {
  const int n = basis.volume_size();
  double total = 0.0;
  for (Index k = 0; k < mesh.element_count(); ++k) {
    const auto tab = detail::tabulate(basis, mesh.element_box(k));
    for (int q = 0; q < tab.volume.nq; ++q)
      for (int cc = c; cc < c + count; ++cc) {
        const double v = detail::eval(tab.volume.phi, n, q, s.field(k, cc).data());
        total += tab.volume.weight[q] * v * v;
      }
  }
  return std::sqrt(total);
}

void write_vtk(std::ostream &os, const QuadMesh &mesh, const BasisP &basis, const VolumeState &s,
               const std::string &title) {
  const int N = basis.nodes_1d();
  const int n = basis.volume_size();
  const Index ne = mesh.element_count();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << ne * n << " double\n";
  os.precision(12);
  for (Index k = 0; k < ne; ++k) {
    const auto box = mesh.element_box(k);
    for (int ay = 0; ay < N; ++ay)
      for (int ax = 0; ax < N; ++ax)
        os << box[0] + 0.5 * (basis.nodes[ax] + 1.0) * (box[1] - box[0]) << ' '
           << box[2] + 0.5 * (basis.nodes[ay] + 1.0) * (box[3] - box[2]) << " 0\n";
  }
  const Index cells = ne * basis.p * basis.p;
  os << "CELLS " << cells << ' ' << cells * 5 << '\n';
  for (Index k = 0; k < ne; ++k)
    for (int cy = 0; cy < basis.p; ++cy)
      for (int cx = 0; cx < basis.p; ++cx) {
        const Index b = k * n + cy * N + cx;
        os << "4 " << b << ' ' << b + 1 << ' ' << b + N + 1 << ' ' << b + N << '\n';
      }
  os << "CELL_TYPES " << cells << '\n';
  for (Index c = 0; c < cells; ++c) os << "9\n";
  os << "POINT_DATA " << ne * n << '\n';
  auto vec = [&](const char *name, int c) {
    os << "VECTORS " << name << " double\n";
    for (Index k = 0; k < ne; ++k)
      for (int a = 0; a < n; ++a) os << s.field(k, c)[a] << ' ' << s.field(k, c + 1)[a] << " 0\n";
  };
  auto scal = [&](const char *name, int c) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Index k = 0; k < ne; ++k)
      for (int a = 0; a < n; ++a) os << s.field(k, c)[a] << '\n';
  };
  vec("velocity", c_ux);
  vec("magnetic", c_bx);
  scal("pressure", c_q);
  scal("current", c_j);
  scal("multiplier", c_r);
}

} // namespace mhdtrace::hdg
