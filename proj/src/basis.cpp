#include "mhdtrace/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mhdtrace::hdg {

namespace {

// Legendre P_n and its derivative at x (three-term recurrence).
void legendre(int n, double x, double &pn, double &dpn) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    pn = 1.0;
    dpn = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  pn = p1;
  dpn = std::abs(x) < 1.0 ? n * (x * p1 - p0) / (x * x - 1.0) : 0.5 * n * (n + 1.0) * std::pow(x, n + 1);
}

} // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dpn = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, pn, dpn);
      const double dx = pn / dpn;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, pn, dpn);
    r.points[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dpn * dpn);
  }
  return r;
}

QuadratureRule gauss_lobatto(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto: n must be >= 2");
  const int p = n - 1;
  QuadratureRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Interior points are the roots of P_p'; Newton on (1-x^2) P_p'.
    double x = -std::cos(std::numbers::pi * i / p);
    if (i > 0 && i < p) {
      for (int it = 0; it < 100; ++it) {
        double pn, dpn;
        legendre(p, x, pn, dpn);
        // d/dx [(1-x^2) P'] = -p(p+1) P
        const double f = (1.0 - x * x) * dpn;
        const double df = -p * (p + 1.0) * pn;
        const double dx = f / df;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
    }
    double pn, dpn;
    legendre(p, x, pn, dpn);
    r.points[i] = x;
    r.weights[i] = 2.0 / (p * (p + 1.0) * pn * pn);
  }
  return r;
}

double lagrange(const std::vector<double> &nodes, int a, double x) {
  double v = 1.0;
  for (int j = 0; j < static_cast<int>(nodes.size()); ++j)
    if (j != a) v *= (x - nodes[j]) / (nodes[a] - nodes[j]);
  return v;
}

double lagrange_derivative(const std::vector<double> &nodes, int a, double x) {
  double sum = 0.0;
  const int n = static_cast<int>(nodes.size());
  for (int k = 0; k < n; ++k) {
    if (k == a) continue;
    double term = 1.0 / (nodes[a] - nodes[k]);
    for (int j = 0; j < n; ++j)
      if (j != a && j != k) term *= (x - nodes[j]) / (nodes[a] - nodes[j]);
    sum += term;
  }
  return sum;
}

BasisP make_basis(int p, int quad_points) {
  if (p < 1) throw std::invalid_argument("basis: degree must be >= 1");
  BasisP b;
  b.p = p;
  b.nodes = gauss_lobatto(p + 1).points;
  b.quad = gauss_legendre(quad_points > 0 ? quad_points : p + 2);
  const int nq = b.quad_1d();
  b.phi.resize(static_cast<std::size_t>(nq * (p + 1)));
  b.dphi.resize(b.phi.size());
  for (int q = 0; q < nq; ++q)
    for (int a = 0; a <= p; ++a) {
      b.phi[q * (p + 1) + a] = lagrange(b.nodes, a, b.quad.points[q]);
      b.dphi[q * (p + 1) + a] = lagrange_derivative(b.nodes, a, b.quad.points[q]);
    }
  return b;
}

} // namespace mhdtrace::hdg
