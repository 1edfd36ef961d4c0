#include "mhdtrace/driver.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mhdtrace/direct.hpp"
#include "mhdtrace/krylov.hpp"

namespace mhdtrace::driver {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Index of the first pressure unknown when the constant pressure is a null
// vector of k, else -1.
Index pressure_pin(const hdg::ReducedSystem &red) {
  Index first = -1;
  Vector ones(red.k.nrows(), 0.0);
  for (Index i = 0; i < red.info.size(); ++i)
    if (red.info.component[i] == precond::TraceDofInfo::pressure) {
      ones[i] = 1.0;
      if (first < 0) first = i;
    }
  if (first < 0) return -1;
  const Vector kv = spmv(red.k, ones);
  double worst = 0.0;
  for (double v : kv) worst = std::max(worst, std::abs(v));
  return worst <= 1e-10 * std::max(1.0, red.k.max_abs()) ? first : -1;
}

} // namespace

void PicardConfig::validate() const {
  if (!(eps_a > 0.0) || !(eps_r > 0.0)) throw std::invalid_argument("PicardConfig: tolerances must be positive");
  if (max_picard < 1) throw std::invalid_argument("PicardConfig: max_picard must be >= 1");
  if (!(linear.relative_tolerance > 0.0) || !(linear.absolute_tolerance > 0.0))
    throw std::invalid_argument("PicardConfig: linear tolerances must be positive");
}

double picard_metric(std::span<const double> delta, std::span<const double> current, const PicardConfig &cfg) {
  if (delta.size() != current.size()) throw DimensionError("picard_metric: length mismatch");
  if (delta.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double r = std::abs(delta[i]) / (cfg.eps_r * std::abs(current[i]) + cfg.eps_a);
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(delta.size()));
}

Discretization make_discretization(const ProblemSpec &problem, Index nx, Index ny, int p) {
  return {hdg::build_mesh(nx, ny, problem.bounds, problem.periodic_x, problem.periodic_y, problem.grading),
          hdg::make_basis(p), problem};
}

SolutionState initial_state(const Discretization &disc) {
  hdg::ExactFields init;
  init.u = disc.problem.u0;
  init.b = disc.problem.b0;
  SolutionState s;
  s.volume = hdg::project_fields(disc.mesh, disc.basis, init);
  const hdg::TraceLayout layout{disc.mesh.edge_count(), disc.mesh.element_count(), disc.basis.p};
  s.trace.assign(layout.size(), 0.0);
  return s;
}

Vector solve_trace_system(const hdg::ReducedSystem &red, const LinearSolverConfig &cfg, LinearSolveStats &stats) {
  const auto t0 = Clock::now();
  const Index n = red.k.nrows();
  const double bnorm = norm2(red.rhs);
  Vector x(n, 0.0);
  if (bnorm == 0.0) {
    stats = {0, true, 0.0, seconds_since(t0)};
    return x;
  }
  try {
    if (cfg.direct) {
      const Index pin = pressure_pin(red);
      SparseMatrixCsr k = red.k;
      Vector b = red.rhs;
      if (pin >= 0) {
        auto tr = k.to_triplets();
        std::erase_if(tr, [pin](const Triplet &t) { return t.row == pin || t.col == pin; });
        tr.push_back({pin, pin, 1.0});
        k = SparseMatrixCsr::from_triplets(n, n, std::move(tr));
        b[pin] = 0.0;
      }
      x = DirectSolver(k).solve(b);
      Vector r(n);
      residual(red.k, x, red.rhs, r);
      stats.iterations = 1;
      stats.relative_residual = norm2(r) / bnorm;
      stats.converged = true;
    } else {
      const auto tp = precond::make_trace_preconditioner(cfg.preconditioner, red.k, red.rhs, red.info, cfg.amg,
                                                         cfg.ilu_steps);
      krylov::SolverOptions opts;
      opts.tolerance_is_relative = cfg.mode == ToleranceMode::relative;
      opts.tolerance = opts.tolerance_is_relative ? cfg.relative_tolerance : cfg.absolute_tolerance;
      opts.max_iterations =
          cfg.max_iterations > 0 ? cfg.max_iterations : precond::default_max_iterations(cfg.preconditioner);
      const krylov::MatrixOperator op(red.k);
      const bool flexible = tp.flexible || cfg.force_flexible || tp.m->is_variable();
      auto res = flexible ? krylov::fgmres(op, *tp.m, red.rhs, opts) : krylov::gmres(op, *tp.m, red.rhs, opts);
      x = std::move(res.x);
      stats.iterations = res.history.iterations;
      stats.converged = res.history.converged;
      stats.relative_residual = res.history.true_relative_residual;
    }
  } catch (const SingularMatrixError &e) {
    throw LinearSolveError(std::string("trace solve: ") + e.what());
  } catch (const krylov::KrylovBreakdown &e) {
    throw LinearSolveError(std::string("trace solve: ") + e.what());
  }
  stats.seconds = seconds_since(t0);
  return x;
}

PicardResult picard_solve(const Discretization &disc, const SolutionState &previous, double dt,
                          const PicardConfig &cfg, const SolutionState *guess) {
  cfg.validate();
  const auto t0 = Clock::now();
  const auto &mesh = disc.mesh;
  const auto &basis = disc.basis;
  PicardResult out;
  out.state = guess ? *guess : previous;
  auto &st = out.stats;
  LinearSolverConfig lin = cfg.linear;
  lin.mode = disc.problem.tolerance_mode == ToleranceMode::absolute ? ToleranceMode::absolute : lin.mode;

  for (int it = 1; it <= cfg.max_picard; ++it) {
    hdg::AssemblyInputs in;
    in.picard = &out.state.volume;
    in.previous = dt > 0.0 ? &previous.volume : nullptr;
    in.dt = dt;
    in.f = disc.problem.f;
    in.g = disc.problem.g;
    for (int s = 0; s < 4; ++s)
      in.mirror_sides[s] = disc.problem.boundary.sides[s].kind == hdg::BoundaryKind::mirror_conductor;
    const auto sys = hdg::assemble_trace_system(mesh, basis, disc.problem.params, in);
    const auto red = hdg::apply_boundary_conditions(sys, mesh, basis, disc.problem.boundary);
    LinearSolveStats ls;
    Vector x = solve_trace_system(red, lin, ls);
    st.linear.push_back(ls);
    hdg::project_velocity_constraint(red, x);
    Vector full = red.expand(x);
    auto vol = hdg::reconstruct_volume(sys, mesh, basis, full);

    const Vector flux = hdg::element_velocity_flux(mesh, basis, full);
    double unorm = 0.0;
    for (Index v = 0; v < 2 * sys.layout.edges * sys.layout.nodes_per_edge(); ++v) unorm += full[v] * full[v];
    unorm = std::sqrt(unorm);
    double fmax = 0.0;
    for (double f : flux) fmax = std::max(fmax, std::abs(f));
    st.max_flux_ratio = std::max(st.max_flux_ratio, unorm > 0.0 ? fmax / unorm : fmax);
    st.max_pressure_mean =
        std::max(st.max_pressure_mean, std::abs(hdg::integrate_component(mesh, basis, vol, hdg::c_q)));

    Vector delta, current;
    delta.reserve(vol.data.size() + full.size());
    current.reserve(delta.capacity());
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
      delta.push_back(vol.data[i] - out.state.volume.data[i]);
      current.push_back(vol.data[i]);
    }
    for (std::size_t i = 0; i < full.size(); ++i) {
      delta.push_back(full[i] - out.state.trace[i]);
      current.push_back(full[i]);
    }
    const double metric = picard_metric(delta, current, cfg);
    st.metrics.push_back(metric);
    st.iterations = it;
    out.state.volume = std::move(vol);
    out.state.trace = std::move(full);
    if (metric < 1.0) {
      st.converged = true;
      break;
    }
    const auto &m = st.metrics;
    const std::size_t k = m.size();
    if (k >= 4 && m[k - 1] > m[k - 2] && m[k - 2] > m[k - 3] && m[k - 3] > m[k - 4]) {
      st.diverged = true;
      break;
    }
  }
  st.seconds = seconds_since(t0);
  return out;
}

void TimeConfig::validate() const {
  if (!(dt0 > 0.0)) throw std::invalid_argument("TimeConfig: dt0 must be positive");
  if (t_end < 0.0) throw std::invalid_argument("TimeConfig: t_end must be >= 0");
  if (t_end == 0.0 && steps < 1) throw std::invalid_argument("TimeConfig: steps must be >= 1");
  if (!(min_dt > 0.0)) throw std::invalid_argument("TimeConfig: min_dt must be positive");
}

double StepRecord::average_linear() const {
  if (linear_iterations.empty()) return 0.0;
  return static_cast<double>(std::accumulate(linear_iterations.begin(), linear_iterations.end(), Index{0})) /
         static_cast<double>(linear_iterations.size());
}

double StepRecord::average_linear_excluding_first() const {
  if (step != 1) return average_linear();
  if (linear_iterations.size() < 2) return 0.0;
  return static_cast<double>(
             std::accumulate(linear_iterations.begin() + 1, linear_iterations.end(), Index{0})) /
         static_cast<double>(linear_iterations.size() - 1);
}

Trajectory advance_time(const Discretization &disc, SolutionState initial, const TimeConfig &tcfg,
                        const PicardConfig &pcfg, const TimeHooks &hooks) {
  tcfg.validate();
  Trajectory traj;
  traj.final_state = std::move(initial);
  double t = 0.0;
  double dt = tcfg.dt0;
  int step = 0;
  auto more = [&]() { return tcfg.t_end > 0.0 ? t < tcfg.t_end - 1e-12 : step < tcfg.steps; };
  while (more()) {
    ++step;
    const auto t0 = Clock::now();
    int attempt = 0;
    for (;;) {
      const double step_dt = tcfg.t_end > 0.0 ? std::min(dt, tcfg.t_end - t) : dt;
      traj.attempted_dt.push_back(step_dt);
      bool failed = hooks.inject_failure && hooks.inject_failure(step, attempt, step_dt);
      std::string reason = failed ? "injected failure" : "";
      if (!failed) {
        try {
          auto res = picard_solve(disc, traj.final_state, step_dt, pcfg);
          if (res.stats.converged) {
            StepRecord rec;
            rec.step = step;
            t += step_dt;
            rec.t = t;
            rec.dt = step_dt;
            rec.picard_iterations = res.stats.iterations;
            for (const auto &l : res.stats.linear) {
              rec.linear_iterations.push_back(l.iterations);
              rec.linear_converged = rec.linear_converged && l.converged;
            }
            rec.max_flux_ratio = res.stats.max_flux_ratio;
            rec.max_pressure_mean = res.stats.max_pressure_mean;
            rec.wall_seconds = seconds_since(t0);
            traj.final_state = std::move(res.state);
            traj.steps.push_back(rec);
            if (hooks.on_step) hooks.on_step(traj.steps.back(), traj.final_state);
            break;
          }
          reason = res.stats.diverged ? "Picard diverged" : "Picard did not converge";
        } catch (const LinearSolveError &e) {
          reason = e.what();
        }
      }
      if (!tcfg.adaptive) throw std::runtime_error("advance_time: step " + std::to_string(step) + ": " + reason);
      dt *= 0.5;
      ++attempt;
      if (dt < tcfg.min_dt) {
        std::ostringstream msg;
        msg << "advance_time: dt underflow at step " << step << " (t = " << t << ", dt = " << dt
            << ", last failure: " << reason << ")";
        throw TimeStepUnderflow(msg.str());
      }
    }
  }
  traj.final_time = t;
  return traj;
}

void write_steps_csv(std::ostream &os, const std::vector<StepRecord> &steps) {
  os << "step,t,dt,picard_iters,avg_linear_iters,avg_linear_iters_excl_first,wall_time\n";
  os.precision(10);
  for (const auto &s : steps)
    os << s.step << ',' << s.t << ',' << s.dt << ',' << s.picard_iterations << ',' << s.average_linear() << ','
       << s.average_linear_excluding_first() << ',' << s.wall_seconds << '\n';
}

} // namespace mhdtrace::driver
