#pragma once

#include <array>
#include <vector>

#include "mhdtrace/sparse.hpp"

namespace mhdtrace::hdg {

enum class Side : int { bottom = 0, right = 1, top = 2, left = 3 };

/// Outward unit normal of element side k.
std::array<double, 2> side_normal(int side);
/// +1 when the side's counterclockwise tangent (-n_y, n_x) equals the edge's
/// global tangent (+x for horizontal, +y for vertical edges), else -1.
int side_tangent_sign(int side);

struct EdgeSide {
  Index element = -1;
  int side = -1;
};

/// Structured axis-aligned quadrilateral mesh. Element (i, j) has index
/// j*nx + i. Horizontal edges come first (row-major over grid lines), then
/// vertical ones. Edges are parameterized along +x (horizontal) or +y
/// (vertical), which is also the parameter direction of every element side.
struct QuadMesh {
  Index nx = 0;
  Index ny = 0;
  bool periodic_x = false;
  bool periodic_y = false;
  std::vector<double> xs;  // nx+1 grid lines
  std::vector<double> ys;  // ny+1 grid lines
  std::vector<std::array<Index, 4>> element_edges;  // by side
  std::vector<std::array<EdgeSide, 2>> edge_sides;  // second entry absent on boundary
  std::vector<int> edge_boundary;                   // Side of the domain or -1
  std::vector<char> edge_horizontal;

  Index element_count() const noexcept { return nx * ny; }
  Index edge_count() const noexcept { return static_cast<Index>(edge_sides.size()); }
  Index vertex_count() const noexcept { return (nx + 1) * (ny + 1); }
  /// x-range and y-range of element K.
  std::array<double, 4> element_box(Index k) const;
  std::array<Index, 4> element_vertices(Index k) const; // counterclockwise
  std::array<double, 2> vertex(Index v) const;
  double area() const { return (xs.back() - xs.front()) * (ys.back() - ys.front()); }
  void validate() const;
};

struct Bounds {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// `grading` > 0 clusters the horizontal grid lines toward the domain's
/// y-midline with y = mid + half * atanh(eta * tanh(g)) / g.
QuadMesh build_mesh(Index nx, Index ny, const Bounds &bounds, bool periodic_x = false,
                    bool periodic_y = false, double grading = 0.0);

} // namespace mhdtrace::hdg
