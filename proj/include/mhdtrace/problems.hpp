#pragma once

#include <optional>
#include <string>

#include "mhdtrace/hdg.hpp"

namespace mhdtrace::driver {

enum class ToleranceMode { relative, absolute };

struct ProblemSpec {
  std::string name;
  hdg::Bounds bounds;
  bool periodic_x = false;
  bool periodic_y = false;
  double grading = 0.0;
  hdg::BoundarySpec boundary;
  hdg::MhdParams params;
  hdg::VectorField u0;  // initial fields; empty means zero
  hdg::VectorField b0;
  hdg::VectorField f;
  hdg::VectorField g;
  std::optional<hdg::ExactFields> exact;
  ToleranceMode tolerance_mode = ToleranceMode::relative;
};

/// c * sin(pi x + ax) * sin(pi y + ay) with closed-form partial derivatives.
struct TrigTerm {
  double c = 1.0;
  double ax = 0.0;
  double ay = 0.0;
  double operator()(double x, double y, int dx = 0, int dy = 0) const;
};

/// Steady manufactured solution on [0,1]^2 with Dirichlet data on all sides.
/// u and b derive from stream functions; q has zero mean and r = 0.
ProblemSpec mms_problem(const hdg::MhdParams &params = {}, double u_scale = 1.0, double b_scale = 1.0);

struct IslandOptions {
  double epsilon = 0.2;
  double sigma = 1e-3;
  double lundquist = 1e3;
  double kappa = 1.0;
};

double island_current(double x, double y, const IslandOptions &opt, double rm);
std::array<double, 2> island_field(double x, double y, double epsilon);
std::array<double, 2> island_perturbation(double x, double y, double sigma);

/// Periodic in x, mirror and conductor on top and bottom, Re = Rm = S.
ProblemSpec island_problem(const IslandOptions &opt = {});

struct HmkhOptions {
  double b0 = 0.3333;
  double delta = 0.1;
  double reynolds = 1e4;
  double kappa = 1.0;
};
ProblemSpec hmkh_problem(const HmkhOptions &opt = {});

struct CavityOptions {
  double reynolds = 1e3;
  double kappa = 1.0;
};
ProblemSpec cavity_problem(const CavityOptions &opt = {});

} // namespace mhdtrace::driver
