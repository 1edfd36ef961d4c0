#include "mhdtrace/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace mhdtrace::hdg {

std::array<double, 2> side_normal(int side) {
  switch (side) {
  case 0: return {0.0, -1.0};
  case 1: return {1.0, 0.0};
  case 2: return {0.0, 1.0};
  case 3: return {-1.0, 0.0};
  }
  throw std::invalid_argument("side_normal: side must be 0..3");
}

int side_tangent_sign(int side) { return side < 2 ? 1 : -1; }

std::array<double, 4> QuadMesh::element_box(Index k) const {
  const Index i = k % nx, j = k / nx;
  return {xs[i], xs[i + 1], ys[j], ys[j + 1]};
}

std::array<Index, 4> QuadMesh::element_vertices(Index k) const {
  const Index i = k % nx, j = k / nx;
  const Index v = j * (nx + 1) + i;
  return {v, v + 1, v + nx + 2, v + nx + 1};
}

std::array<double, 2> QuadMesh::vertex(Index v) const {
  return {xs[v % (nx + 1)], ys[v / (nx + 1)]};
}

void QuadMesh::validate() const {
  for (Index e = 0; e < edge_count(); ++e) {
    const auto &s = edge_sides[e];
    if (s[0].element < 0) throw std::logic_error("mesh: edge without element");
    if ((s[1].element < 0) != (edge_boundary[e] >= 0))
      throw std::logic_error("mesh: boundary tagging inconsistent with incidence");
    if (s[1].element >= 0) {
      const auto n0 = side_normal(s[0].side), n1 = side_normal(s[1].side);
      if (n0[0] != -n1[0] || n0[1] != -n1[1])
        throw std::logic_error("mesh: shared edge normals are not opposite");
    }
  }
  for (Index k = 0; k < element_count(); ++k) {
    const auto b = element_box(k);
    if (!(b[1] > b[0] && b[3] > b[2])) throw std::logic_error("mesh: non-positive Jacobian");
  }
}

QuadMesh build_mesh(Index nx, Index ny, const Bounds &bounds, bool periodic_x, bool periodic_y,
                    double grading) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_mesh: nx, ny must be >= 1");
  if (!(bounds.x1 > bounds.x0) || !(bounds.y1 > bounds.y0))
    throw std::invalid_argument("build_mesh: degenerate bounds");
  if (grading < 0.0) throw std::invalid_argument("build_mesh: grading must be >= 0");
  QuadMesh m;
  m.nx = nx;
  m.ny = ny;
  m.periodic_x = periodic_x;
  m.periodic_y = periodic_y;
  for (Index i = 0; i <= nx; ++i)
    m.xs.push_back(bounds.x0 + (bounds.x1 - bounds.x0) * static_cast<double>(i) / nx);
  const double mid = 0.5 * (bounds.y0 + bounds.y1), half = 0.5 * (bounds.y1 - bounds.y0);
  for (Index j = 0; j <= ny; ++j) {
    const double eta = -1.0 + 2.0 * static_cast<double>(j) / ny;
    const double s = grading > 0.0 ? std::atanh(eta * std::tanh(grading)) / grading : eta;
    m.ys.push_back(j == 0 ? bounds.y0 : j == ny ? bounds.y1 : mid + half * s);
  }

  const Index hlines = periodic_y ? ny : ny + 1;
  const Index vlines = periodic_x ? nx : nx + 1;
  const Index nh = hlines * nx;
  const Index nv = vlines * ny;
  m.edge_sides.assign(nh + nv, {});
  m.edge_boundary.assign(nh + nv, -1);
  m.edge_horizontal.assign(nh + nv, 0);
  for (Index e = 0; e < nh; ++e) m.edge_horizontal[e] = 1;
  auto horiz = [&](Index line, Index i) { return (line % hlines) * nx + i; };
  auto vert = [&](Index j, Index line) { return nh + j * vlines + (line % vlines); };

  m.element_edges.resize(nx * ny);
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index k = j * nx + i;
      const std::array<Index, 4> edges{horiz(j, i), vert(j, i + 1), horiz(j + 1, i), vert(j, i)};
      m.element_edges[k] = edges;
      for (int side = 0; side < 4; ++side) {
        auto &slots = m.edge_sides[edges[side]];
        // Bottom/left sides go second so that every edge lists the element
        // below / to the left of it first.
        const int slot = (side == 0 || side == 3) ? 1 : 0;
        slots[slot] = {k, side};
      }
    }
  // Compact boundary edges so the present side is always in slot 0.
  for (Index e = 0; e < nh + nv; ++e) {
    auto &s = m.edge_sides[e];
    if (s[0].element < 0) std::swap(s[0], s[1]);
    if (s[1].element < 0) m.edge_boundary[e] = s[0].side;
  }
  m.validate();
  return m;
}

} // namespace mhdtrace::hdg
