#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mhdtrace/basis.hpp"
#include "mhdtrace/block_precond.hpp"
#include "mhdtrace/dense.hpp"
#include "mhdtrace/mesh.hpp"
#include "mhdtrace/sparse.hpp"

namespace mhdtrace::hdg {

struct MhdParams {
  double re = 1.0;
  double rm = 1.0;
  double kappa = 1.0;
  double xi = 0.5;
  double beta_n = 1.0;
  double beta_t = 1.0;

  double hartmann() const;
  /// Throws std::invalid_argument on non-positive Re, Rm, kappa, beta or xi outside [0, 1].
  void validate() const;
};

struct Stabilization {
  double tau_t = 0.0;
  double tau_n = 0.0;
};

Stabilization stabilization(double w_dot_n);
/// tau_t (I - n n^T) + tau_n n n^T, row-major.
std::array<double, 4> stabilization_tensor(double w_dot_n, const std::array<double, 2> &n);

/// Volume components per element, in storage order:
/// L_xx L_xy L_yx L_yy u_x u_y q J b_x b_y r.
inline constexpr int kVolumeComponents = 11;
enum Component : int {
  c_lxx = 0, c_lxy = 1, c_lyx = 2, c_lyy = 3,
  c_ux = 4, c_uy = 5, c_q = 6, c_j = 7, c_bx = 8, c_by = 9, c_r = 10
};

/// Nodal coefficients of every volume field, [(e * 11 + c) * n + a] with
/// n = (p + 1)^2.
struct VolumeState {
  Index elements = 0;
  int p = 1;
  Vector data;

  VolumeState() = default;
  VolumeState(Index elements, int p);
  int n() const noexcept { return (p + 1) * (p + 1); }
  std::span<double> element(Index e);
  std::span<const double> element(Index e) const;
  std::span<double> field(Index e, int c);
  std::span<const double> field(Index e, int c) const;
};

using ScalarField = std::function<double(double x, double y)>;
using VectorField = std::function<std::array<double, 2>(double x, double y)>;

/// Global trace numbering with N = p + 1 nodes per edge and E edges:
/// [u-hat (interleaved x, y) | rho (one per element) | b-hat tangential | r-hat].
struct TraceLayout {
  Index edges = 0;
  Index elements = 0;
  int p = 1;

  Index nodes_per_edge() const noexcept { return p + 1; }
  Index velocity(Index edge, int m, int i) const noexcept { return ((edge * (p + 1) + m) * 2) + i; }
  Index pressure(Index k) const noexcept { return 2 * edges * (p + 1) + k; }
  Index tangential_b(Index edge, int m) const noexcept {
    return 2 * edges * (p + 1) + elements + edge * (p + 1) + m;
  }
  Index multiplier(Index edge, int m) const noexcept {
    return 3 * edges * (p + 1) + elements + edge * (p + 1) + m;
  }
  Index size() const noexcept { return 4 * edges * (p + 1) + elements; }
  precond::TraceDofInfo dof_info() const;
};

/// Local trace vector of one element: [((side * N + m) * 4 + f)] with
/// f = u-hat_x, u-hat_y, b-hat, r-hat, then rho at 16 N.
inline constexpr int trace_field_count = 4;
Index local_trace_size(int p);

/// Element geometry and frozen data for one local solve.
struct LocalInputs {
  std::array<double, 4> box{0.0, 1.0, 0.0, 1.0};
  std::span<const double> w;       // 2n nodal values, empty means zero
  std::span<const double> d;       // 2n nodal values, empty means zero
  std::span<const double> u_prev;  // 2n, used when inv_dt > 0
  std::span<const double> b_prev;  // 2n, used when inv_dt > 0
  /// Face values of w and d at [((side * nq) + q) * 2 + i]; empty means the
  /// element's own trace.
  std::span<const double> face_w;
  std::span<const double> face_d;
  /// Sides whose u-hat rows carry the fluid traction only (mirror walls).
  std::array<bool, 4> fluid_traction_only{};
  double inv_dt = 0.0;             // 0 selects the steady problem
  VectorField f;
  VectorField g;
};

/// Local rows M V + C Lambda = F and element conservation rows
/// G V + H Lambda = R (u-hat, b-hat, r-hat per side node, then rho).
struct LocalSystem {
  DenseMatrix m;
  DenseMatrix c;
  Vector f;
  DenseMatrix g;
  DenseMatrix h;
  Vector r;
};

LocalSystem assemble_local(const BasisP &basis, const MhdParams &params, const LocalInputs &in);

/// K = H - G M^{-1} C, rhs = R - G M^{-1} F; volume = shift - recon * Lambda.
struct CondensedElement {
  DenseMatrix k;
  Vector rhs;
  DenseMatrix recon;  // M^{-1} C
  Vector shift;       // M^{-1} F
};

/// Throws SingularMatrixError when M is singular.
CondensedElement static_condense(const LocalSystem &local);

struct AssemblyInputs {
  const VolumeState *picard = nullptr;    // w = u, d = b of this iterate
  const VolumeState *previous = nullptr;  // previous time level
  double dt = 0.0;                        // <= 0 selects the steady problem
  VectorField f;
  VectorField g;
  /// Domain sides (Side order) with mirror walls.
  std::array<bool, 4> mirror_sides{};
};

/// Assembled global trace system in the layout of TraceLayout. Rows of the
/// rho block hold the per-element constraint, the rho columns hold its
/// negated transpose.
struct TraceSystem {
  TraceLayout layout;
  SparseMatrixCsr k;
  Vector rhs;
  std::vector<std::vector<Index>> element_dofs;  // local trace index -> global
  std::vector<DenseMatrix> recon;
  std::vector<Vector> shift;
  int p = 1;
};

TraceSystem assemble_trace_system(const QuadMesh &mesh, const BasisP &basis, const MhdParams &params,
                                  const AssemblyInputs &in);

enum class BoundaryKind { periodic, dirichlet, mirror_conductor };

struct SideCondition {
  BoundaryKind kind = BoundaryKind::dirichlet;
  VectorField velocity;  // dirichlet
  VectorField magnetic;  // tangential part imposed on dirichlet sides and fixed mirror sides
  bool fix_tangential_b = false;  // mirror_conductor only
};

/// Conditions per domain side in Side order (bottom, right, top, left).
struct BoundarySpec {
  std::array<SideCondition, 4> sides;
};

/// System on the free trace unknowns with fixed values lifted to the rhs.
struct ReducedSystem {
  SparseMatrixCsr k;
  Vector rhs;
  std::vector<Index> free;   // reduced index -> full index
  Vector fixed;              // full-length; fixed values, zero on free dofs
  precond::TraceDofInfo info;
  Index full_size = 0;

  Vector expand(std::span<const double> reduced) const;
  Vector restrict_to_free(std::span<const double> full) const;
};

/// Throws std::invalid_argument when a boundary edge lies on a periodic side
/// or a periodic side disagrees with the mesh.
ReducedSystem apply_boundary_conditions(const TraceSystem &sys, const QuadMesh &mesh,
                                        const BasisP &basis, const BoundarySpec &spec);

/// Per-element velocity flux <u-hat . n, 1> of a full trace vector.
Vector element_velocity_flux(const QuadMesh &mesh, const BasisP &basis, std::span<const double> trace);

/// Restores the per-element flux constraint on the free velocity traces by
/// the minimum-norm correction u <- u - D^T (D D^T)^{-1} (D u - g).
void project_velocity_constraint(const ReducedSystem &reduced, std::span<double> x);

/// Volume fields from a full trace vector. q and rho are shifted together so
/// that (q, 1) = 0.
VolumeState reconstruct_volume(const TraceSystem &sys, const QuadMesh &mesh, const BasisP &basis,
                               std::span<double> trace);

/// Residual of the local equations for the reconstructed state (max norm).
double local_residual(const QuadMesh &mesh, const BasisP &basis, const MhdParams &params,
                      const AssemblyInputs &in, const VolumeState &state,
                      std::span<const double> trace);

/// (field, 1) over the domain for component c.
double integrate_component(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s, int c);

/// L2 projection of exact fields onto the volume space. Missing fields stay zero.
struct ExactFields {
  VectorField u;
  VectorField b;
  ScalarField q;
  ScalarField r;
  std::function<std::array<double, 4>(double, double)> l;  // L_xx L_xy L_yx L_yy
  ScalarField j;
};

VolumeState project_fields(const QuadMesh &mesh, const BasisP &basis, const ExactFields &exact);

struct FieldErrors {
  double l = 0.0, u = 0.0, q = 0.0, j = 0.0, b = 0.0, r = 0.0;
};

/// L2 errors with a quadrature of `extra` more points than the basis rule.
FieldErrors compute_errors(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s,
                           const ExactFields &exact, int extra = 2);

/// L2 norm of one vector field (components c, c+1) or scalar (c only).
double l2_norm(const QuadMesh &mesh, const BasisP &basis, const VolumeState &s, int c, int count);

/// Legacy ASCII VTK unstructured grid with the volume fields sampled at the
/// element's nodal points.
void write_vtk(std::ostream &os, const QuadMesh &mesh, const BasisP &basis, const VolumeState &s,
               const std::string &title = "mhdtrace");

} // namespace mhdtrace::hdg
