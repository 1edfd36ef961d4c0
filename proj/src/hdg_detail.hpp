#pragma once

#include <array>
#include <vector>

#include "mhdtrace/basis.hpp"

namespace mhdtrace::hdg::detail {

/// Basis values on one axis-aligned element; volume functions a = ay*N + ax,
/// quadrature points qy*nq + qx.
struct VolumeTable {
  int n = 0;   // basis functions
  int nq = 0;  // points
  std::vector<double> x, y, weight;
  std::vector<double> phi, dx, dy;  // [q*n + a]
};

struct SideTable {
  int side = 0;
  std::array<double, 2> normal{};
  std::array<double, 2> tangent{};  // (-n_y, n_x)
  int sign = 1;                     // tangent = sign * edge direction
  double length = 0.0;
  int nq = 0;
  std::vector<double> x, y, weight;
  std::vector<double> phi;  // [q*n + a]
  std::vector<double> psi;  // [q*N + m]
};

struct ElementTable {
  VolumeTable volume;
  std::array<SideTable, 4> sides;
  double perimeter = 0.0;
  double area = 0.0;
};

ElementTable tabulate(const BasisP &basis, const std::array<double, 4> &box);

/// Sum_a coeffs[a] * phi[q*n + a].
inline double eval(const std::vector<double> &phi, int n, int q, const double *coeffs) {
  double v = 0.0;
  for (int a = 0; a < n; ++a) v += coeffs[a] * phi[q * n + a];
  return v;
}

} // namespace mhdtrace::hdg::detail
