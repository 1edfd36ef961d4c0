#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mhdtrace/block_precond.hpp"
#include "mhdtrace/hdg.hpp"
#include "mhdtrace/problems.hpp"

namespace mhdtrace::driver {

struct LinearSolverConfig {
  precond::PreconditionerId preconditioner = precond::PreconditionerId::bfbt_amg_gmres;
  ToleranceMode mode = ToleranceMode::relative;
  double relative_tolerance = 1e-6;
  double absolute_tolerance = 1e-9;
  Index max_iterations = 0;  // 0 selects the preconditioner's default cap
  amg::AmgConfig amg;
  Index ilu_steps = 3;
  bool direct = false;       // sparse LU instead of a Krylov solve
  bool force_flexible = false;
};

struct PicardConfig {
  double eps_a = 1e-6;
  double eps_r = 1e-4;
  int max_picard = 20;
  LinearSolverConfig linear;
  void validate() const;
};

/// sqrt(mean_i (|d_i| / (eps_r |x_i| + eps_a))^2); converged iff < 1.
double picard_metric(std::span<const double> delta, std::span<const double> current,
                     const PicardConfig &cfg);

/// Mesh, basis and problem of one run.
struct Discretization {
  hdg::QuadMesh mesh;
  hdg::BasisP basis;
  ProblemSpec problem;
};

Discretization make_discretization(const ProblemSpec &problem, Index nx, Index ny, int p);

struct SolutionState {
  hdg::VolumeState volume;
  Vector trace;  // full trace layout
};

/// Projected initial fields (u0, b0) with a zero trace.
SolutionState initial_state(const Discretization &disc);

struct LinearSolveStats {
  Index iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  double seconds = 0.0;
};

struct PicardStats {
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::vector<LinearSolveStats> linear;
  std::vector<double> metrics;
  double max_flux_ratio = 0.0;      // max_K |<u-hat.n, 1>| / ||u-hat||
  double max_pressure_mean = 0.0;   // max |(q, 1)|
  double seconds = 0.0;
};

struct PicardResult {
  SolutionState state;
  PicardStats stats;
};

class LinearSolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Solves one reduced trace system with the configured method.
Vector solve_trace_system(const hdg::ReducedSystem &reduced, const LinearSolverConfig &cfg,
                          LinearSolveStats &stats);

/// Picard iteration for one backward-Euler step (dt > 0) or the steady
/// problem (dt <= 0). `guess` defaults to `previous`.
PicardResult picard_solve(const Discretization &disc, const SolutionState &previous, double dt,
                          const PicardConfig &cfg, const SolutionState *guess = nullptr);

struct TimeConfig {
  double dt0 = 0.05;
  double t_end = 0.0;   // 0 means run `steps` steps
  int steps = 1;
  bool adaptive = true;
  double min_dt = 1e-8;
  void validate() const;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  int picard_iterations = 0;
  std::vector<Index> linear_iterations;  // per Picard iteration
  bool linear_converged = true;
  double wall_seconds = 0.0;
  double max_flux_ratio = 0.0;
  double max_pressure_mean = 0.0;

  double average_linear() const;
  /// Average without the first Picard iteration of step 1.
  double average_linear_excluding_first() const;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  std::vector<double> attempted_dt;  // every attempt, in order
  SolutionState final_state;
  double final_time = 0.0;
};

class TimeStepUnderflow : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TimeHooks {
  /// Returning true forces the attempt to count as a Picard failure.
  std::function<bool(int step, int attempt, double dt)> inject_failure;
  std::function<void(const StepRecord &, const SolutionState &)> on_step;
};

/// Backward Euler with halving on Picard failure; dt is never increased.
Trajectory advance_time(const Discretization &disc, SolutionState initial, const TimeConfig &tcfg,
                        const PicardConfig &pcfg, const TimeHooks &hooks = {});

/// Rows "step,t,dt,picard_iters,avg_linear_iters,avg_linear_iters_excl_first,wall_time".
void write_steps_csv(std::ostream &os, const std::vector<StepRecord> &steps);

} // namespace mhdtrace::driver
