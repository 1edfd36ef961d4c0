#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mhdtrace/driver.hpp"

namespace mhdtrace::app {

inline constexpr const char *kVersion = "0.1.0";

enum class Subcommand { mms, solve, robustness, compare, generic };

Subcommand parse_subcommand(const std::string &name);
std::string to_string(Subcommand s);

/// `line` is 0 for command-line overrides.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string &source, int line, const std::string &what);
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Fully resolved run configuration. Problem-specific physics stays unset
/// unless given, so each problem keeps its own defaults.
struct RunConfig {
  // [run]
  std::string problem = "mms";  // mms | island | hmkh | cavity | generic
  std::string output_dir = "mhdtrace-out";
  std::uint64_t seed = 1;
  bool timing = true;           // false writes zero wall times
  int vtk_every = 0;            // 0 disables VTK output

  // [mesh]
  Index nx = 8;
  Index ny = 0;                 // 0 means nx
  int p = 1;
  double grading = 0.0;

  // [physics]
  std::optional<double> lundquist, re, rm, kappa, xi;
  double epsilon = 0.2;         // island
  double sigma = 1e-3;          // island perturbation
  double b0 = 0.3333;           // hmkh
  double delta = 0.1;           // hmkh

  // [time]
  double dt = 0.1;
  double t_end = 0.0;
  int steps = 1;
  bool adaptive = true;
  double min_dt = 1e-8;

  // [solver] and [picard]
  driver::PicardConfig picard;
  std::string outer_solver = "gmres";  // resolved: gmres | fgmres | direct

  // [mms]
  std::vector<Index> mms_meshes{8, 16, 32};
  std::vector<int> mms_degrees{1, 2};
  // [robustness]
  std::vector<double> robustness_lundquist{1e3, 1e4, 1e5, 1e6};
  // [compare]
  std::vector<precond::PreconditionerId> compare_preconditioners{
      precond::PreconditionerId::dd_ilu0, precond::PreconditionerId::bfbt_amg_ilu0,
      precond::PreconditionerId::bfbt_amg_gmres};

  // [generic]
  std::string matrix;
  std::string rhs;              // empty draws a seeded random rhs
  std::vector<Index> blocks;    // {velocity, pressure}; empty means no split
  Index node_size = 1;

  /// "section.key" entries given explicitly (file or override).
  std::set<std::string> explicit_keys;

  bool is_set(const std::string &key) const { return explicit_keys.count(key) != 0; }
};

/// Parses the INI-style text; unknown keys, duplicates, malformed lines and
/// type mismatches throw ConfigError with the line number. Does not resolve.
RunConfig parse_config(std::istream &in, const std::string &source = "<config>");
RunConfig parse_config_file(const std::string &path);

/// `key` is "section.key" or a bare key that is unique across sections.
void apply_override(RunConfig &cfg, const std::string &key, const std::string &value);

/// Resolves derived settings (outer solver, hmkh tolerance mode, ny) and
/// validates ranges and referenced files.
void resolve(RunConfig &cfg);

/// Every known key as ("section.key", current value), in grammar order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig &cfg);

driver::ProblemSpec make_problem(const RunConfig &cfg);

/// Least-squares slope of log(err) against log(h).
double observed_rate(const std::vector<double> &h, const std::vector<double> &err);

/// Iteration entry of a result table; non-converged entries carry "*".
std::string table_entry(double value, bool converged);

struct MmsRow {
  int p = 1;
  Index nx = 0;
  double h = 0.0;
  hdg::FieldErrors errors;
  int picard_iterations = 0;
  bool converged = false;
};

std::vector<MmsRow> mms_study(const RunConfig &cfg);

/// One row per (p, mesh); rate columns hold the rate against the previous
/// mesh of the same degree and stay empty on its first mesh.
void write_mms_csv(std::ostream &os, const std::vector<MmsRow> &rows);
/// One row per degree with the least-squares rates over all its meshes.
void write_mms_rates_csv(std::ostream &os, const std::vector<MmsRow> &rows);

struct CaseResult {
  std::string label;
  std::vector<driver::StepRecord> steps;
  double avg_linear = 0.0;
  double avg_linear_excl_first = 0.0;
  double avg_picard = 0.0;
  double seconds_per_picard = 0.0;
  bool converged = true;  // every Picard and linear solve converged
  std::string failure;    // set when the run aborted
};

using StepCallback = std::function<void(const driver::Discretization &, const driver::StepRecord &,
                                        const driver::SolutionState &)>;

/// Runs the configured problem (steady for mms, otherwise time stepping)
/// with the given linear solver. Solver exceptions are caught into `failure`.
CaseResult run_case(const RunConfig &cfg, const driver::ProblemSpec &problem,
                    const driver::LinearSolverConfig &linear, const std::string &label,
                    const StepCallback &on_step = {});

/// Columns: label,avg_linear_iters,avg_linear_iters_excl_first,avg_picard_iters,time_per_picard.
void write_case_table(std::ostream &os, const std::string &label_name,
                      const std::vector<CaseResult> &rows, bool timing);

struct GenericResult {
  Vector x;
  krylov::IterationHistory history;
  std::string method;
};

/// Solves A x = b with the configured preconditioner. `blocks` = {velocity,
/// pressure} marks the trailing unknowns as pressure; empty allows dd-ilu0
/// only. Missing diagonal entries are added as explicit zeros.
GenericResult generic_solve(const SparseMatrixCsr &a, std::span<const double> b, const std::vector<Index> &blocks,
                            Index node_size, const driver::LinearSolverConfig &lin);
/// Reads cfg.matrix and cfg.rhs (or draws a seeded rhs) and solves.
GenericResult generic_solve(const RunConfig &cfg);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 solver failure or non-converged entries
  std::vector<std::string> outputs;
};

/// Executes the study and writes its artifacts plus manifest.json into
/// cfg.output_dir.
RunOutcome run(Subcommand sub, const RunConfig &cfg, std::ostream &log);

} // namespace mhdtrace::app
