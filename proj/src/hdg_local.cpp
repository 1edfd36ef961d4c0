#include <cmath>
#include <stdexcept>

#include "hdg_detail.hpp"
#include "mhdtrace/hdg.hpp"

namespace mhdtrace::hdg {

double MhdParams::hartmann() const { return std::sqrt(kappa * re * rm); }

void MhdParams::validate() const {
  if (!(re > 0.0) || !(rm > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("MhdParams: Re, Rm and kappa must be positive");
  if (!(beta_n > 0.0) || !(beta_t > 0.0))
    throw std::invalid_argument("MhdParams: beta_n and beta_t must be positive");
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("MhdParams: xi must lie in [0, 1]");
}

Stabilization stabilization(double w_dot_n) {
  const double w2 = w_dot_n * w_dot_n;
  return {0.5 * std::sqrt(4.0 + w2), 0.5 * std::sqrt(8.0 + w2)};
}

std::array<double, 4> stabilization_tensor(double w_dot_n, const std::array<double, 2> &n) {
  const auto [tt, tn] = stabilization(w_dot_n);
  std::array<double, 4> s{};
  for (int i = 0; i < 2; ++i)
    for (int l = 0; l < 2; ++l)
      s[2 * i + l] = tt * ((i == l ? 1.0 : 0.0) - n[i] * n[l]) + tn * n[i] * n[l];
  return s;
}

VolumeState::VolumeState(Index elements_, int p_)
    : elements(elements_), p(p_),
      data(static_cast<std::size_t>(elements_ * kVolumeComponents * (p_ + 1) * (p_ + 1)), 0.0) {}

std::span<double> VolumeState::element(Index e) {
  const std::size_t len = static_cast<std::size_t>(kVolumeComponents * n());
  return {data.data() + e * len, len};
}
std::span<const double> VolumeState::element(Index e) const {
  const std::size_t len = static_cast<std::size_t>(kVolumeComponents * n());
  return {data.data() + e * len, len};
}
std::span<double> VolumeState::field(Index e, int c) { return element(e).subspan(c * n(), n()); }
std::span<const double> VolumeState::field(Index e, int c) const {
  return element(e).subspan(c * n(), n());
}

precond::TraceDofInfo TraceLayout::dof_info() const {
  precond::TraceDofInfo info;
  info.node.resize(size());
  info.component.resize(size());
  const Index nodes = edges * (p + 1);
  for (Index v = 0; v < nodes; ++v)
    for (int i = 0; i < 2; ++i) {
      info.node[2 * v + i] = v;
      info.component[2 * v + i] = i;
    }
  for (Index k = 0; k < elements; ++k) {
    info.node[pressure(k)] = k;
    info.component[pressure(k)] = precond::TraceDofInfo::pressure;
  }
  for (Index v = 0; v < nodes; ++v) {
    const Index bt = 2 * nodes + elements + v;
    info.node[bt] = v;
    info.component[bt] = 2;
    info.node[bt + nodes] = v;
    info.component[bt + nodes] = 3;
  }
  return info;
}

Index local_trace_size(int p) { return 16 * (p + 1) + 1; }

namespace detail {

ElementTable tabulate(const BasisP &basis, const std::array<double, 4> &box) {
  ElementTable t;
  const int N = basis.nodes_1d();
  const int n = basis.volume_size();
  const int nq = basis.quad_1d();
  const double hx = box[1] - box[0], hy = box[3] - box[2];
  auto map_x = [&](double s) { return box[0] + 0.5 * (s + 1.0) * hx; };
  auto map_y = [&](double s) { return box[2] + 0.5 * (s + 1.0) * hy; };
  t.area = hx * hy;
  t.perimeter = 2.0 * (hx + hy);

  auto &v = t.volume;
  v.n = n;
  v.nq = nq * nq;
  v.x.resize(v.nq);
  v.y.resize(v.nq);
  v.weight.resize(v.nq);
  v.phi.resize(static_cast<std::size_t>(v.nq * n));
  v.dx.resize(v.phi.size());
  v.dy.resize(v.phi.size());
  for (int qy = 0; qy < nq; ++qy)
    for (int qx = 0; qx < nq; ++qx) {
      const int q = qy * nq + qx;
      v.x[q] = map_x(basis.quad.points[qx]);
      v.y[q] = map_y(basis.quad.points[qy]);
      v.weight[q] = basis.quad.weights[qx] * basis.quad.weights[qy] * 0.25 * hx * hy;
      for (int ay = 0; ay < N; ++ay)
        for (int ax = 0; ax < N; ++ax) {
          const int a = ay * N + ax;
          v.phi[q * n + a] = basis.value(qx, ax) * basis.value(qy, ay);
          v.dx[q * n + a] = basis.derivative(qx, ax) * basis.value(qy, ay) * 2.0 / hx;
          v.dy[q * n + a] = basis.value(qx, ax) * basis.derivative(qy, ay) * 2.0 / hy;
        }
    }

  for (int k = 0; k < 4; ++k) {
    auto &s = t.sides[k];
    s.side = k;
    s.normal = side_normal(k);
    s.tangent = {-s.normal[1], s.normal[0]};
    s.sign = side_tangent_sign(k);
    const bool horizontal = (k == 0 || k == 2);
    s.length = horizontal ? hx : hy;
    s.nq = nq;
    s.x.resize(nq);
    s.y.resize(nq);
    s.weight.resize(nq);
    s.phi.resize(static_cast<std::size_t>(nq * n));
    s.psi.resize(static_cast<std::size_t>(nq * N));
    const double fixed = (k == 0 || k == 3) ? -1.0 : 1.0;
    for (int q = 0; q < nq; ++q) {
      const double sq = basis.quad.points[q];
      s.weight[q] = basis.quad.weights[q] * 0.5 * s.length;
      s.x[q] = horizontal ? map_x(sq) : map_x(fixed);
      s.y[q] = horizontal ? map_y(fixed) : map_y(sq);
      for (int m = 0; m < N; ++m) s.psi[q * N + m] = basis.value(q, m);
      for (int ay = 0; ay < N; ++ay)
        for (int ax = 0; ax < N; ++ax) {
          const double lx = horizontal ? basis.value(q, ax) : lagrange(basis.nodes, ax, fixed);
          const double ly = horizontal ? lagrange(basis.nodes, ay, fixed) : basis.value(q, ay);
          s.phi[q * n + ay * N + ax] = lx * ly;
        }
    }
  }
  return t;
}

} // namespace detail

LocalSystem assemble_local(const BasisP &basis, const MhdParams &params, const LocalInputs &in) {
  const int N = basis.nodes_1d();
  const int n = basis.volume_size();
  const Index nv = kVolumeComponents * n;
  const Index nt = local_trace_size(basis.p);
  const Index rho = nt - 1;
  for (auto sp : {in.w, in.d, in.u_prev, in.b_prev})
    if (!sp.empty() && static_cast<int>(sp.size()) != 2 * n)
      throw DimensionError("assemble_local: nodal field length must be 2(p+1)^2");
  const std::size_t face_len = static_cast<std::size_t>(8 * basis.quad_1d());
  for (auto sp : {in.face_w, in.face_d})
    if (!sp.empty() && sp.size() != face_len) throw DimensionError("assemble_local: face field length mismatch");
  if (in.inv_dt > 0.0 && (in.u_prev.empty() || in.b_prev.empty()))
    throw std::invalid_argument("assemble_local: transient step needs the previous state");

  const auto tab = detail::tabulate(basis, in.box);
  LocalSystem ls{DenseMatrix(nv, nv), DenseMatrix(nv, nt), Vector(nv, 0.0),
                 DenseMatrix(nt, nv), DenseMatrix(nt, nt), Vector(nt, 0.0)};
  auto &M = ls.m;
  auto &C = ls.c;
  auto &G = ls.g;
  auto &H = ls.h;

  const double re = params.re, kap = params.kappa, xi = params.xi;
  const double rmk = params.rm / params.kappa;
  const double bn = 1.0 / params.beta_n, bt = params.beta_t;
  const double idt = in.inv_dt;
  auto V = [n](int c, int a) -> Index { return static_cast<Index>(c) * n + a; };
  auto T = [N](int side, int m, int f) -> Index { return (static_cast<Index>(side) * N + m) * 4 + f; };
  auto field_at = [&](std::span<const double> coeffs, int comp, const std::vector<double> &phi, int q) {
    return coeffs.empty() ? 0.0 : detail::eval(phi, n, q, coeffs.data() + comp * n);
  };

  // Volume terms.
  const auto &vt = tab.volume;
  for (int q = 0; q < vt.nq; ++q) {
    const double W = vt.weight[q];
    const double w[2] = {field_at(in.w, 0, vt.phi, q), field_at(in.w, 1, vt.phi, q)};
    const double d[2] = {field_at(in.d, 0, vt.phi, q), field_at(in.d, 1, vt.phi, q)};
    const double dd[2] = {d[1], -d[0]};
    const double vd[2] = {kap * dd[0], kap * dd[1]};
    const double *ph = &vt.phi[q * n];
    const double *px = &vt.dx[q * n];
    const double *py = &vt.dy[q * n];
    for (int a = 0; a < n; ++a) {
      const double pa = ph[a];
      const double ga[2] = {px[a], py[a]};
      const double curlc[2] = {-py[a], px[a]};
      for (int b = 0; b < n; ++b) {
        const double pb = ph[b];
        const double gb[2] = {px[b], py[b]};
        const double mass = W * pa * pb;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            M(V(2 * i + j, a), V(2 * i + j, b)) += re * mass;
            M(V(2 * i + j, a), V(c_ux + i, b)) += W * pb * ga[j];
            M(V(c_ux + i, a), V(2 * i + j, b)) -= W * gb[j] * pa;
          }
        const double wgb = w[0] * gb[0] + w[1] * gb[1];
        const double wga = w[0] * ga[0] + w[1] * ga[1];
        for (int i = 0; i < 2; ++i) {
          const Index row = V(c_ux + i, a);
          M(row, V(c_ux + i, b)) += idt * mass - 0.5 * W * pb * wga + 0.5 * W * wgb * pa;
          M(row, V(c_q, b)) += W * gb[i] * pa;
          M(row, V(c_by, b)) += W * gb[0] * pa * vd[i];
          M(row, V(c_bx, b)) -= W * gb[1] * pa * vd[i];
          M(V(c_q, a), V(c_ux + i, b)) -= W * pb * ga[i];
        }
        M(V(c_j, a), V(c_j, b)) += rmk * mass;
        M(V(c_j, a), V(c_bx, b)) -= W * pb * ga[1];
        M(V(c_j, a), V(c_by, b)) += W * pb * ga[0];
        for (int i = 0; i < 2; ++i) {
          const Index row = V(c_bx + i, a);
          M(row, V(c_bx + i, b)) += kap * idt * mass;
          M(row, V(c_j, b)) += (i == 0 ? 1.0 : -1.0) * W * gb[1 - i] * pa;
          M(row, V(c_r, b)) -= W * pb * ga[i];
          M(row, V(c_ux, b)) -= W * kap * d[1] * pb * curlc[i];
          M(row, V(c_uy, b)) += W * kap * d[0] * pb * curlc[i];
          M(V(c_r, a), V(c_bx + i, b)) += W * gb[i] * pa;
        }
      }
    }
    std::array<double, 2> fv{0.0, 0.0}, gv{0.0, 0.0};
    if (in.f) fv = in.f(vt.x[q], vt.y[q]);
    if (in.g) gv = in.g(vt.x[q], vt.y[q]);
    for (int i = 0; i < 2; ++i) {
      double up = 0.0, bp = 0.0;
      if (idt > 0.0) {
        up = field_at(in.u_prev, i, vt.phi, q);
        bp = field_at(in.b_prev, i, vt.phi, q);
      }
      for (int a = 0; a < n; ++a) {
        ls.f[V(c_ux + i, a)] += W * ph[a] * (fv[i] + idt * up);
        ls.f[V(c_bx + i, a)] += W * ph[a] * (gv[i] + kap * idt * bp);
      }
    }
  }

  // Boundary averages for the continuity row.
  std::vector<double> mavg(n, 0.0);
  for (const auto &st : tab.sides)
    for (int q = 0; q < st.nq; ++q)
      for (int a = 0; a < n; ++a) mavg[a] += st.weight[q] * st.phi[q * n + a];
  for (auto &v : mavg) v /= tab.perimeter;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) M(V(c_q, a), V(c_q, b)) += tab.perimeter * mavg[a] * mavg[b];
    C(V(c_q, a), rho) -= tab.perimeter * mavg[a];
  }

  // Face terms.
  for (const auto &st : tab.sides) {
    const int k = st.side;
    const auto &nn = st.normal;
    const auto &tl = st.tangent;
    const double sg = st.sign;
    for (int q = 0; q < st.nq; ++q) {
      const double W = st.weight[q];
      double w[2] = {field_at(in.w, 0, st.phi, q), field_at(in.w, 1, st.phi, q)};
      double d[2] = {field_at(in.d, 0, st.phi, q), field_at(in.d, 1, st.phi, q)};
      const std::size_t fq = (static_cast<std::size_t>(k) * st.nq + q) * 2;
      if (!in.face_w.empty()) w[0] = in.face_w[fq], w[1] = in.face_w[fq + 1];
      if (!in.face_d.empty()) d[0] = in.face_d[fq], d[1] = in.face_d[fq + 1];
      const double dd[2] = {d[1], -d[0]};
      const double vd[2] = {kap * dd[0], kap * dd[1]};
      const double wn = w[0] * nn[0] + w[1] * nn[1];
      const auto S = stabilization_tensor(wn, nn);
      const double *ph = &st.phi[q * n];
      const double *ps = &st.psi[q * N];

      for (int a = 0; a < n; ++a) {
        const double pa = ph[a];
        for (int m = 0; m < N; ++m)
          for (int i = 0; i < 2; ++i) C(V(c_q, a), T(k, m, i)) += W * ps[m] * nn[i] * (pa - mavg[a]);
        if (pa == 0.0) continue;
        for (int b = 0; b < n; ++b) {
          const double pb = ph[b];
          if (pb == 0.0) continue;
          const double wpp = W * pa * pb;
          for (int i = 0; i < 2; ++i) {
            for (int l = 0; l < 2; ++l) {
              M(V(c_ux + i, a), V(c_ux + l, b)) += S[2 * i + l] * wpp;
              M(V(c_ux + i, a), V(c_bx + l, b)) -= (1.0 - xi) * tl[l] * vd[i] * wpp;
              M(V(c_bx + i, a), V(c_bx + l, b)) += bt * tl[l] * tl[i] * wpp;
            }
            M(V(c_bx + i, a), V(c_ux, b)) += (1.0 - xi) * kap * d[1] * tl[i] * wpp;
            M(V(c_bx + i, a), V(c_uy, b)) -= (1.0 - xi) * kap * d[0] * tl[i] * wpp;
          }
          M(V(c_r, a), V(c_r, b)) += bn * wpp;
        }
        for (int m = 0; m < N; ++m) {
          const double wpm = W * pa * ps[m];
          if (wpm == 0.0) continue;
          for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) C(V(2 * i + j, a), T(k, m, i)) -= nn[j] * wpm;
            for (int l = 0; l < 2; ++l)
              C(V(c_ux + i, a), T(k, m, l)) += (0.5 * wn * (i == l ? 1.0 : 0.0) - S[2 * i + l]) * wpm;
            C(V(c_ux + i, a), T(k, m, 2)) += (1.0 - xi) * sg * vd[i] * wpm;
            const Index rb = V(c_bx + i, a);
            C(rb, T(k, m, 3)) += nn[i] * wpm;
            C(rb, T(k, m, 0)) += xi * kap * d[1] * tl[i] * wpm;
            C(rb, T(k, m, 1)) -= xi * kap * d[0] * tl[i] * wpm;
            C(rb, T(k, m, 2)) -= bt * sg * tl[i] * wpm;
          }
          C(V(c_j, a), T(k, m, 2)) -= sg * wpm;
          C(V(c_r, a), T(k, m, 3)) -= bn * wpm;
        }
      }
      // Conservation rows.
      for (int m = 0; m < N; ++m) {
        const double pm = ps[m];
        if (pm == 0.0) continue;
        for (int b = 0; b < n; ++b) {
          const double wpb = W * ph[b] * pm;
          if (wpb == 0.0) continue;
          for (int i = 0; i < 2; ++i) {
            const Index row = T(k, m, i);
            for (int j = 0; j < 2; ++j) G(row, V(2 * i + j, b)) += nn[j] * wpb;
            G(row, V(c_q, b)) -= nn[i] * wpb;
            for (int l = 0; l < 2; ++l)
              G(row, V(c_ux + l, b)) -= (0.5 * wn * (i == l ? 1.0 : 0.0) + S[2 * i + l]) * wpb;
            if (!in.fluid_traction_only[k]) {
              G(row, V(c_by, b)) -= kap * xi * nn[0] * dd[i] * wpb;
              G(row, V(c_bx, b)) += kap * xi * nn[1] * dd[i] * wpb;
            }
            G(T(k, m, 3), V(c_bx + i, b)) -= nn[i] * wpb;
          }
          const Index rb = T(k, m, 2);
          G(rb, V(c_j, b)) += sg * wpb;
          for (int l = 0; l < 2; ++l) G(rb, V(c_bx + l, b)) -= sg * bt * tl[l] * wpb;
          G(rb, V(c_ux, b)) -= sg * (1.0 - xi) * kap * d[1] * wpb;
          G(rb, V(c_uy, b)) += sg * (1.0 - xi) * kap * d[0] * wpb;
          G(T(k, m, 3), V(c_r, b)) -= bn * wpb;
        }
        for (int m2 = 0; m2 < N; ++m2) {
          const double wmm = W * ps[m2] * pm;
          for (int i = 0; i < 2; ++i)
            for (int l = 0; l < 2; ++l) H(T(k, m, i), T(k, m2, l)) += S[2 * i + l] * wmm;
          H(T(k, m, 2), T(k, m2, 2)) += bt * wmm;
          H(T(k, m, 3), T(k, m2, 3)) += bn * wmm;
        }
        for (int i = 0; i < 2; ++i) H(rho, T(k, m, i)) += W * nn[i] * pm;
      }
    }
  }
  return ls;
}

CondensedElement static_condense(const LocalSystem &local) {
  const Index nv = local.m.nrows();
  if (local.m.ncols() != nv || local.c.nrows() != nv || local.g.ncols() != nv ||
      local.h.nrows() != local.g.nrows() || local.h.ncols() != local.c.ncols() ||
      static_cast<Index>(local.f.size()) != nv ||
      static_cast<Index>(local.r.size()) != local.h.nrows())
    throw DimensionError("static_condense: inconsistent block sizes");
  DenseLu lu(local.m);
  CondensedElement out;
  out.recon = lu.solve(local.c);
  out.shift = local.f;
  lu.solve_in_place(out.shift);
  const DenseMatrix gmc = local.g * out.recon;
  out.k = local.h;
  for (std::size_t i = 0; i < out.k.values().size(); ++i) out.k.values()[i] -= gmc.values()[i];
  const Vector gmf = local.g * std::span<const double>(out.shift);
  out.rhs = local.r;
  for (std::size_t i = 0; i < out.rhs.size(); ++i) out.rhs[i] -= gmf[i];
  return out;
}

} // namespace mhdtrace::hdg
