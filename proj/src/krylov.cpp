#include "mhdtrace/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace mhdtrace::krylov {

void IdentityPreconditioner::apply(std::span<const double> r,
                                   std::span<double> z) const {
  std::copy(r.begin(), r.end(), z.begin());
}

namespace {

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Shared Arnoldi loop. With `flexible`, z_j = M v_j is kept and the update is
// x = x0 + Z y; otherwise x = x0 + M (V y).
SolveResult arnoldi_solve(const LinearOperator &a, const Preconditioner &m,
                          std::span<const double> b, const SolverOptions &opts,
                          std::span<const double> x0, bool flexible) {
  const Index n = a.size();
  if (static_cast<Index>(b.size()) != n || m.size() != n)
    throw DimensionError("gmres: dimension mismatch");
  if (!x0.empty() && static_cast<Index>(x0.size()) != n)
    throw DimensionError("gmres: initial guess size mismatch");
  if (!flexible && m.is_variable())
    throw std::invalid_argument("gmres: variable preconditioner requires fgmres");

  SolveResult result;
  result.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), result.x.begin());
  auto &hist = result.history;

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(result.x.begin(), result.x.end(), 0.0);
    hist.relative_residuals = {0.0};
    hist.converged = true;
    return result;
  }
  const double target = opts.tolerance_is_relative ? opts.tolerance * bnorm : opts.tolerance;

  Vector r(n);
  a.apply(result.x, r);
  for (Index i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double beta = norm2(r);
  hist.relative_residuals.push_back(beta / bnorm);
  if (beta <= target) {
    hist.converged = true;
    hist.true_relative_residual = beta / bnorm;
    return result;
  }

  const Index maxit = std::max<Index>(opts.max_iterations, 0);
  std::vector<Vector> basis;
  std::vector<Vector> zbasis;
  basis.reserve(maxit + 1);
  if (flexible) zbasis.reserve(maxit);
  basis.emplace_back(r);
  for (double &v : basis.back()) v /= beta;

  // Hessenberg columns after rotation (upper triangular R), rotations, rhs g.
  std::vector<Vector> hcols;
  std::vector<double> cs, sn, g{beta};
  Vector z(n), w(n);
  Index k = 0;
  bool done = false;
  while (k < maxit && !done) {
    m.apply(basis[k], z);
    if (flexible) zbasis.push_back(z);
    a.apply(z, w);
    if (!finite(w)) throw KrylovBreakdown("gmres: non-finite value in Krylov basis");
    const double wnorm0 = norm2(w);
    Vector h(k + 2, 0.0);
    for (Index j = 0; j <= k; ++j) {
      const double hij = dot(w, basis[j]);
      h[j] = hij;
      axpy(-hij, basis[j], w);
    }
    double wnorm = norm2(w);
    // Second pass: only applied when the first one left visible components.
    if (wnorm > 0.0) {
      std::vector<double> corr(k + 1);
      double worst = 0.0;
      for (Index j = 0; j <= k; ++j) {
        corr[j] = dot(w, basis[j]);
        worst = std::max(worst, std::abs(corr[j]));
      }
      if (worst > opts.reorthogonalization_threshold * wnorm) {
        for (Index j = 0; j <= k; ++j) {
          h[j] += corr[j];
          axpy(-corr[j], basis[j], w);
        }
        wnorm = norm2(w);
      }
    }
    h[k + 1] = wnorm;
    for (Index j = 0; j < k; ++j) {
      const double t = cs[j] * h[j] + sn[j] * h[j + 1];
      h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
      h[j] = t;
    }
    const double denom = std::hypot(h[k], h[k + 1]);
    double c = 1.0, s = 0.0;
    if (denom > 0.0) {
      c = h[k] / denom;
      s = h[k + 1] / denom;
    }
    cs.push_back(c);
    sn.push_back(s);
    h[k] = c * h[k] + s * h[k + 1];
    h[k + 1] = 0.0;
    g.push_back(-s * g[k]);
    g[k] = c * g[k];
    hcols.push_back(std::move(h));
    ++k;
    const double res = std::abs(g[k]);
    hist.relative_residuals.push_back(res / bnorm);
    const bool happy = wnorm <= 1e-14 * std::max(wnorm0, 1e-300);
    if (res <= target || happy) {
      done = true;
    } else {
      basis.emplace_back(w);
      for (double &v : basis.back()) v /= wnorm;
    }
  }

  // Back substitution for y in R y = g.
  Vector y(k, 0.0);
  for (Index i = k - 1; i >= 0; --i) {
    double s = g[i];
    for (Index j = i + 1; j < k; ++j) s -= hcols[j][i] * y[j];
    y[i] = hcols[i][i] != 0.0 ? s / hcols[i][i] : 0.0;
  }
  if (flexible) {
    for (Index j = 0; j < k; ++j) axpy(y[j], zbasis[j], result.x);
  } else {
    Vector v(n, 0.0);
    for (Index j = 0; j < k; ++j) axpy(y[j], basis[j], v);
    m.apply(v, z);
    axpy(1.0, z, result.x);
  }
  hist.iterations = k;
  a.apply(result.x, r);
  for (Index i = 0; i < n; ++i) r[i] = b[i] - r[i];
  hist.true_relative_residual = norm2(r) / bnorm;
  hist.converged = hist.relative_residuals.back() * bnorm <= target || done;
  if (!finite(result.x)) throw KrylovBreakdown("gmres: non-finite solution");
  return result;
}

} // namespace

SolveResult gmres(const LinearOperator &a, const Preconditioner &m,
                  std::span<const double> b, const SolverOptions &opts,
                  std::span<const double> x0) {
  return arnoldi_solve(a, m, b, opts, x0, false);
}

SolveResult fgmres(const LinearOperator &a, const Preconditioner &m,
                   std::span<const double> b, const SolverOptions &opts,
                   std::span<const double> x0) {
  return arnoldi_solve(a, m, b, opts, x0, true);
}

void write_history_csv(std::ostream &os, const std::string &solve_id,
                       const IterationHistory &h, bool header) {
  if (header) os << "solve_id,iter,relres\n";
  os << std::setprecision(10);
  for (std::size_t k = 0; k < h.relative_residuals.size(); ++k)
    os << solve_id << ',' << k << ',' << h.relative_residuals[k] << '\n';
}

} // namespace mhdtrace::krylov
