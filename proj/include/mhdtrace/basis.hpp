#pragma once

#include <vector>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace::hdg {

struct QuadratureRule {
  std::vector<double> points;  // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule; exact for degree 2n-1.
QuadratureRule gauss_legendre(int n);
/// n-point Gauss-Lobatto-Legendre points (n >= 2), endpoints included.
QuadratureRule gauss_lobatto(int n);

/// Value / derivative of the a-th Lagrange polynomial through `nodes` at x.
double lagrange(const std::vector<double> &nodes, int a, double x);
double lagrange_derivative(const std::vector<double> &nodes, int a, double x);

/// Degree-p nodal Lagrange basis on Gauss-Lobatto points with its values and
/// derivatives tabulated on a Gauss rule of p+2 points (or `quad_points`).
/// Tensor-product volume function a = ay*(p+1) + ax.
struct BasisP {
  int p = 1;
  std::vector<double> nodes;     // p+1 GLL points
  QuadratureRule quad;
  std::vector<double> phi;       // [q*(p+1) + a]
  std::vector<double> dphi;      // [q*(p+1) + a]

  int nodes_1d() const noexcept { return p + 1; }
  int volume_size() const noexcept { return (p + 1) * (p + 1); }
  int quad_1d() const noexcept { return static_cast<int>(quad.points.size()); }
  double value(int q, int a) const { return phi[q * (p + 1) + a]; }
  double derivative(int q, int a) const { return dphi[q * (p + 1) + a]; }
};

BasisP make_basis(int p, int quad_points = 0);

} // namespace mhdtrace::hdg
