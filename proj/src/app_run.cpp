#include "mhdtrace/app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mhdtrace::app {

namespace {

namespace fs = std::filesystem;
using driver::ProblemSpec;
using driver::StepRecord;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void reject_unused(const RunConfig &cfg, const std::string &key, bool allowed) {
  if (!allowed && cfg.is_set(key))
    throw ConfigError("<resolved config>", 0, key + " does not apply to problem '" + cfg.problem + "'");
}

std::array<double, 6> error_array(const hdg::FieldErrors &e) { return {e.u, e.b, e.l, e.j, e.q, e.r}; }

std::ofstream open_output(const fs::path &path, std::vector<std::string> &outputs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  outputs.push_back(path.filename().string());
  return os;
}

void write_vector(std::ostream &os, std::span<const double> v) {
  os << std::setprecision(17);
  for (double x : v) os << x << '\n';
}

Vector read_vector(const std::string &path, Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rhs file " + path);
  Vector v;
  double x = 0.0;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw std::runtime_error("rhs file " + path + " holds a non-numeric entry");
  if (static_cast<Index>(v.size()) != n)
    throw std::runtime_error("rhs file " + path + " has " + std::to_string(v.size()) + " entries, expected " +
                             std::to_string(n));
  return v;
}

/// ILU(0) needs every diagonal slot in the pattern; missing ones become
/// explicit zeros.
SparseMatrixCsr with_diagonal(const SparseMatrixCsr &a) {
  if (a.ncols() != a.nrows()) throw std::runtime_error("generic: matrix must be square");
  std::vector<Triplet> t;
  for (Index i = 0; i < a.nrows(); ++i) {
    bool diag = false;
    for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      t.push_back({i, a.col_indices()[k], a.values()[k]});
      diag = diag || a.col_indices()[k] == i;
    }
    if (!diag) t.push_back({i, i, 0.0});
  }
  return SparseMatrixCsr::from_triplets(a.nrows(), a.ncols(), std::move(t));
}

StepRecord steady_record(const driver::PicardStats &st) {
  StepRecord rec;
  rec.step = 1;
  rec.picard_iterations = st.iterations;
  for (const auto &l : st.linear) {
    rec.linear_iterations.push_back(l.iterations);
    rec.linear_converged = rec.linear_converged && l.converged;
  }
  rec.wall_seconds = st.seconds;
  rec.max_flux_ratio = st.max_flux_ratio;
  rec.max_pressure_mean = st.max_pressure_mean;
  return rec;
}

void summarize(CaseResult &c, bool timing) {
  double linear = 0.0, picard = 0.0, excl = 0.0, excl_count = 0.0, seconds = 0.0;
  for (std::size_t s = 0; s < c.steps.size(); ++s) {
    const auto &rec = c.steps[s];
    for (std::size_t k = 0; k < rec.linear_iterations.size(); ++k) {
      linear += static_cast<double>(rec.linear_iterations[k]);
      if (s == 0 && k == 0) continue;
      excl += static_cast<double>(rec.linear_iterations[k]);
      excl_count += 1.0;
    }
    picard += static_cast<double>(rec.linear_iterations.size());
    seconds += rec.wall_seconds;
    c.converged = c.converged && rec.linear_converged;
  }
  c.avg_linear = picard > 0 ? linear / picard : 0.0;
  c.avg_linear_excl_first = excl_count > 0 ? excl / excl_count : c.avg_linear;
  c.avg_picard = c.steps.empty() ? 0.0 : picard / static_cast<double>(c.steps.size());
  c.seconds_per_picard = timing && picard > 0 ? seconds / picard : 0.0;
  if (!c.failure.empty()) c.converged = false;
}

nlohmann::json manifest(Subcommand sub, const RunConfig &cfg, const RunOutcome &out) {
  nlohmann::json config = nlohmann::json::object();
  for (const auto &[key, value] : config_entries(cfg)) {
    const auto dot = key.find('.');
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  nlohmann::json j;
  j["schema"] = "mhdtrace-manifest/1";
  j["tool"] = "mhdtrace";
  j["version"] = kVersion;
  j["subcommand"] = to_string(sub);
  j["config"] = config;
  j["resolved"] = {{"outer_solver", cfg.outer_solver}};
  j["outputs"] = out.outputs;
  j["exit_code"] = out.exit_code;
#if defined(__clang__)
  j["build"]["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["build"]["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  j["build"]["cplusplus"] = static_cast<long>(__cplusplus);
  return j;
}

} // namespace

driver::ProblemSpec make_problem(const RunConfig &cfg) {
  const std::string &name = cfg.problem;
  reject_unused(cfg, "physics.lundquist", name == "island");
  reject_unused(cfg, "physics.re", name == "mms" || name == "hmkh" || name == "cavity");
  reject_unused(cfg, "physics.rm", name == "mms");
  ProblemSpec problem;
  if (name == "mms") {
    hdg::MhdParams prm;
    prm.re = cfg.re.value_or(prm.re);
    prm.rm = cfg.rm.value_or(prm.rm);
    prm.kappa = cfg.kappa.value_or(prm.kappa);
    prm.xi = cfg.xi.value_or(prm.xi);
    problem = driver::mms_problem(prm);
  } else {
    if (name == "island") {
      driver::IslandOptions opt;
      opt.epsilon = cfg.epsilon;
      opt.sigma = cfg.sigma;
      opt.lundquist = cfg.lundquist.value_or(opt.lundquist);
      opt.kappa = cfg.kappa.value_or(opt.kappa);
      problem = driver::island_problem(opt);
    } else if (name == "hmkh") {
      driver::HmkhOptions opt;
      opt.b0 = cfg.b0;
      opt.delta = cfg.delta;
      opt.reynolds = cfg.re.value_or(opt.reynolds);
      opt.kappa = cfg.kappa.value_or(opt.kappa);
      problem = driver::hmkh_problem(opt);
    } else if (name == "cavity") {
      driver::CavityOptions opt;
      opt.reynolds = cfg.re.value_or(opt.reynolds);
      opt.kappa = cfg.kappa.value_or(opt.kappa);
      problem = driver::cavity_problem(opt);
    } else {
      throw ConfigError("<resolved config>", 0, "problem '" + name + "' has no discretization; use the generic subcommand");
    }
    if (cfg.xi) problem.params.xi = *cfg.xi;
  }
  if (cfg.is_set("mesh.grading")) problem.grading = cfg.grading;
  if (cfg.is_set("solver.tolerance_mode")) problem.tolerance_mode = cfg.picard.linear.mode;
  return problem;
}

double observed_rate(const std::vector<double> &h, const std::vector<double> &err) {
  if (h.size() != err.size() || h.size() < 2)
    throw std::invalid_argument("observed_rate: need at least two matching (h, err) pairs");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= 0.0 || err[i] <= 0.0) throw std::invalid_argument("observed_rate: h and err must be positive");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) throw std::invalid_argument("observed_rate: mesh sizes must differ");
  return (n * sxy - sx * sy) / den;
}

std::string table_entry(double value, bool converged) { return fixed2(value) + (converged ? "" : "*"); }

std::vector<MmsRow> mms_study(const RunConfig &cfg) {
  const ProblemSpec problem = make_problem(cfg);
  if (!problem.exact) throw ConfigError("<resolved config>", 0, "mms study needs a problem with an exact solution");
  std::vector<MmsRow> rows;
  for (int p : cfg.mms_degrees) {
    for (Index n : cfg.mms_meshes) {
      const auto disc = driver::make_discretization(problem, n, n, p);
      const auto res = driver::picard_solve(disc, driver::initial_state(disc), 0.0, cfg.picard);
      MmsRow row;
      row.p = p;
      row.nx = n;
      row.h = (problem.bounds.x1 - problem.bounds.x0) / static_cast<double>(n);
      row.errors = hdg::compute_errors(disc.mesh, disc.basis, res.state.volume, *problem.exact);
      row.picard_iterations = res.stats.iterations;
      row.converged = res.stats.converged;
      for (const auto &l : res.stats.linear) row.converged = row.converged && l.converged;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_mms_csv(std::ostream &os, const std::vector<MmsRow> &rows) {
  os << "p,nx,h,err_u,err_b,err_l,err_j,err_q,err_r,rate_u,rate_b,rate_l,rate_j,rate_q,rate_r,picard_iters\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &r = rows[i];
    const auto e = error_array(r.errors);
    os << r.p << ',' << r.nx << ',' << sci(r.h);
    for (double v : e) os << ',' << sci(v);
    const bool has_prev = i > 0 && rows[i - 1].p == r.p;
    for (int c = 0; c < 6; ++c) {
      os << ',';
      if (has_prev) {
        const auto ep = error_array(rows[i - 1].errors);
        os << fixed2(std::log(ep[c] / e[c]) / std::log(rows[i - 1].h / r.h));
      }
    }
    os << ',' << r.picard_iterations << (r.converged ? "" : "*") << '\n';
  }
}

void write_mms_rates_csv(std::ostream &os, const std::vector<MmsRow> &rows) {
  os << "p,meshes,rate_u,rate_b,rate_l,rate_j,rate_q,rate_r\n";
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> h;
    std::array<std::vector<double>, 6> err;
    for (; j < rows.size() && rows[j].p == rows[i].p; ++j) {
      h.push_back(rows[j].h);
      const auto e = error_array(rows[j].errors);
      for (int c = 0; c < 6; ++c) err[c].push_back(e[c]);
    }
    os << rows[i].p << ',' << h.size();
    for (int c = 0; c < 6; ++c) os << ',' << (h.size() >= 2 ? fixed2(observed_rate(h, err[c])) : std::string());
    os << '\n';
    i = j;
  }
}

CaseResult run_case(const RunConfig &cfg, const ProblemSpec &problem, const driver::LinearSolverConfig &linear,
                    const std::string &label, const StepCallback &on_step) {
  CaseResult c;
  c.label = label;
  driver::PicardConfig pc = cfg.picard;
  pc.linear = linear;
  const auto disc = driver::make_discretization(problem, cfg.nx, cfg.ny, cfg.p);
  try {
    if (problem.name == "mms") {
      const auto res = driver::picard_solve(disc, driver::initial_state(disc), 0.0, pc);
      c.steps.push_back(steady_record(res.stats));
      if (!res.stats.converged) c.failure = "Picard iteration did not converge";
      if (on_step) on_step(disc, c.steps.back(), res.state);
    } else {
      driver::TimeConfig tc;
      tc.dt0 = cfg.dt;
      tc.t_end = cfg.t_end;
      tc.steps = cfg.steps;
      tc.adaptive = cfg.adaptive;
      tc.min_dt = cfg.min_dt;
      driver::TimeHooks hooks;
      hooks.on_step = [&](const StepRecord &rec, const driver::SolutionState &s) {
        c.steps.push_back(rec);
        if (on_step) on_step(disc, rec, s);
      };
      driver::advance_time(disc, driver::initial_state(disc), tc, pc, hooks);
    }
  } catch (const std::exception &e) {
    c.failure = e.what();
  }
  if (!cfg.timing)
    for (auto &rec : c.steps) rec.wall_seconds = 0.0;
  summarize(c, cfg.timing);
  return c;
}

void write_case_table(std::ostream &os, const std::string &label_name, const std::vector<CaseResult> &rows,
                      bool timing) {
  os << label_name << ",avg_linear_iters,avg_linear_iters_excl_first,avg_picard_iters,time_per_picard\n";
  for (const auto &r : rows)
    os << r.label << ',' << table_entry(r.avg_linear, r.converged) << ','
       << table_entry(r.avg_linear_excl_first, r.converged) << ',' << fixed2(r.avg_picard) << ','
       << sci(timing ? r.seconds_per_picard : 0.0) << '\n';
}

GenericResult generic_solve(const SparseMatrixCsr &matrix, std::span<const double> b,
                            const std::vector<Index> &blocks, Index node_size,
                            const driver::LinearSolverConfig &lin) {
  if (lin.direct) throw ConfigError("<resolved config>", 0, "solver.direct does not apply to the generic path");
  const SparseMatrixCsr a = with_diagonal(matrix);
  const Index n = a.nrows();
  if (static_cast<Index>(b.size()) != n) throw DimensionError("generic: rhs size differs from the matrix");
  if (node_size < 1 || node_size > 4) throw ConfigError("<resolved config>", 0, "generic.node_size must lie in [1, 4]");

  precond::TraceDofInfo info;
  info.node.resize(static_cast<std::size_t>(n));
  info.component.resize(static_cast<std::size_t>(n));
  Index nu = n;
  if (!blocks.empty()) {
    if (blocks.size() != 2 || blocks[0] < 0 || blocks[1] < 0 || blocks[0] + blocks[1] != n)
      throw ConfigError("<resolved config>", 0,
                        "generic.blocks must be two sizes summing to the matrix size " + std::to_string(n));
    nu = blocks[0];
  } else if (lin.preconditioner != precond::PreconditionerId::dd_ilu0) {
    throw ConfigError("<resolved config>", 0,
                      "generic.blocks is required by " + precond::to_string(lin.preconditioner));
  }
  for (Index i = 0; i < n; ++i) {
    const bool pressure = i >= nu;
    info.node[i] = pressure ? i - nu : i / node_size;
    info.component[i] = pressure ? precond::TraceDofInfo::pressure : static_cast<int>(i % node_size);
  }

  const auto tp = precond::make_trace_preconditioner(lin.preconditioner, a, b, info, lin.amg, lin.ilu_steps);
  krylov::SolverOptions opts;
  opts.tolerance_is_relative = lin.mode == driver::ToleranceMode::relative;
  opts.tolerance = opts.tolerance_is_relative ? lin.relative_tolerance : lin.absolute_tolerance;
  opts.max_iterations = lin.max_iterations > 0 ? lin.max_iterations : precond::default_max_iterations(lin.preconditioner);
  const bool flexible = tp.flexible || lin.force_flexible || tp.m->is_variable();
  krylov::MatrixOperator op(a);
  auto res = flexible ? krylov::fgmres(op, *tp.m, b, opts) : krylov::gmres(op, *tp.m, b, opts);
  return {std::move(res.x), std::move(res.history), flexible ? "fgmres" : "gmres"};
}

GenericResult generic_solve(const RunConfig &cfg) {
  const SparseMatrixCsr a = read_matrix_market(cfg.matrix);
  Vector b;
  if (!cfg.rhs.empty()) {
    b = read_vector(cfg.rhs, a.nrows());
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    b.resize(static_cast<std::size_t>(a.nrows()));
    for (auto &x : b) x = dist(rng);
  }
  return generic_solve(a, b, cfg.blocks, cfg.node_size, cfg.picard.linear);
}

RunOutcome run(Subcommand sub, const RunConfig &cfg, std::ostream &log) {
  const bool generic_problem = cfg.problem == "generic";
  if ((sub == Subcommand::generic) != generic_problem)
    throw ConfigError("<resolved config>", 0,
                      sub == Subcommand::generic ? "the generic subcommand needs run.problem = generic"
                                                 : "run.problem = generic needs the generic subcommand");
  if (sub == Subcommand::robustness && cfg.problem != "island")
    throw ConfigError("<resolved config>", 0, "the robustness sweep varies the Lundquist number of the island problem");
  if (sub == Subcommand::mms && cfg.problem != "mms")
    throw ConfigError("<resolved config>", 0, "the mms subcommand needs run.problem = mms");

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  RunOutcome out;
  auto fail = [&](const std::string &what) {
    log << "error: " << what << '\n';
    out.exit_code = 2;
  };

  switch (sub) {
  case Subcommand::mms: {
    std::vector<MmsRow> rows;
    try {
      rows = mms_study(cfg);
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &e) {
      fail(e.what());
    }
    {
      auto os = open_output(dir / "mms.csv", out.outputs);
      write_mms_csv(os, rows);
    }
    {
      auto os = open_output(dir / "mms_rates.csv", out.outputs);
      write_mms_rates_csv(os, rows);
    }
    write_mms_rates_csv(log, rows);
    for (const auto &r : rows)
      if (!r.converged) out.exit_code = 2;
    break;
  }
  case Subcommand::solve: {
    const ProblemSpec problem = make_problem(cfg);
    std::optional<driver::SolutionState> last;
    std::optional<driver::Discretization> last_disc;
    const auto result = run_case(cfg, problem, cfg.picard.linear, cfg.problem,
                                 [&](const driver::Discretization &disc, const StepRecord &rec,
                                     const driver::SolutionState &s) {
                                   if (cfg.vtk_every > 0 && rec.step % cfg.vtk_every == 0) {
                                     char name[64];
                                     std::snprintf(name, sizeof name, "solution_%04d.vtk", rec.step);
                                     auto os = open_output(dir / name, out.outputs);
                                     hdg::write_vtk(os, disc.mesh, disc.basis, s.volume, cfg.problem);
                                   }
                                   last = s;
                                   if (!last_disc) last_disc = disc;
                                 });
    {
      auto os = open_output(dir / "steps.csv", out.outputs);
      driver::write_steps_csv(os, result.steps);
    }
    if (problem.exact && last) {
      const auto e = hdg::compute_errors(last_disc->mesh, last_disc->basis, last->volume, *problem.exact);
      auto os = open_output(dir / "errors.csv", out.outputs);
      os << "err_u,err_b,err_l,err_j,err_q,err_r\n";
      const auto v = error_array(e);
      for (int c = 0; c < 6; ++c) os << (c ? "," : "") << sci(v[c]);
      os << '\n';
    }
    driver::write_steps_csv(log, result.steps);
    if (!result.failure.empty()) fail(result.failure);
    else if (!result.converged) fail("a linear solve did not reach its tolerance");
    break;
  }
  case Subcommand::robustness:
  case Subcommand::compare: {
    std::vector<CaseResult> rows;
    if (sub == Subcommand::robustness) {
      for (double s : cfg.robustness_lundquist) {
        RunConfig c = cfg;
        c.lundquist = s;
        c.explicit_keys.insert("physics.lundquist");
        char label[32];
        std::snprintf(label, sizeof label, "%g", s);
        rows.push_back(run_case(c, make_problem(c), cfg.picard.linear, label));
      }
    } else {
      const ProblemSpec problem = make_problem(cfg);
      for (const auto id : cfg.compare_preconditioners) {
        driver::LinearSolverConfig lin = cfg.picard.linear;
        lin.preconditioner = id;
        lin.direct = false;
        rows.push_back(run_case(cfg, problem, lin, precond::to_string(id)));
      }
    }
    const std::string file = sub == Subcommand::robustness ? "robustness.csv" : "compare.csv";
    const std::string label = sub == Subcommand::robustness ? "lundquist" : "preconditioner";
    {
      auto os = open_output(dir / file, out.outputs);
      write_case_table(os, label, rows, cfg.timing);
    }
    write_case_table(log, label, rows, cfg.timing);
    for (const auto &r : rows) {
      if (!r.failure.empty()) log << r.label << ": " << r.failure << '\n';
      if (!r.converged) out.exit_code = 2;
    }
    break;
  }
  case Subcommand::generic: {
    const auto res = generic_solve(cfg);
    {
      auto os = open_output(dir / "history.csv", out.outputs);
      krylov::write_history_csv(os, "generic", res.history, true);
    }
    {
      auto os = open_output(dir / "solution.txt", out.outputs);
      write_vector(os, res.x);
    }
    log << res.method << ": " << res.history.iterations << " iterations, true relative residual "
        << sci(res.history.true_relative_residual) << (res.history.converged ? "" : " *") << '\n';
    if (!res.history.converged) fail("the Krylov solve did not reach its tolerance");
    break;
  }
  }

  out.outputs.push_back("manifest.json");
  std::ofstream os(dir / "manifest.json");
  os << manifest(sub, cfg, out).dump(2) << '\n';
  return out;
}

} // namespace mhdtrace::app
