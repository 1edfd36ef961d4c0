#include "mhdtrace/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace mhdtrace::app {

namespace {

using precond::PreconditionerId;

/// Value-level failure; the caller attaches source and line.
struct ValueError {
  std::string message;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_integer(const std::string &s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValueError{"expects an integer, got '" + s + "'"};
  return v;
}

double parse_real(const std::string &s) {
  double v = 0.0;
  const char *first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ValueError{"expects a real number, got '" + s + "'"};
  return v;
}

bool parse_bool(const std::string &s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ValueError{"expects a boolean (true/false), got '" + s + "'"};
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ValueError{"expects a comma-separated list, got '" + s + "'"};
    out.push_back(item);
  }
  if (out.empty()) throw ValueError{"expects a non-empty list"};
  return out;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T> &v, const std::function<std::string(const T &)> &fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

PreconditionerId parse_precond(const std::string &s) {
  try {
    return precond::parse_preconditioner_id(s);
  } catch (const std::exception &) {
    throw ValueError{"expects one of dd-ilu0, bfbt-amg-ilu0, bfbt-amg-gmres, ideal, got '" + s + "'"};
  }
}

struct KeyDef {
  const char *section;
  const char *name;
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define MHD_INT(sec, key, field, type)                                                   \
  KeyDef{sec, key, [](RunConfig &c, const std::string &v) { c.field = parse_integer<type>(v); }, \
         [](const RunConfig &c) { return std::to_string(c.field); }}
#define MHD_REAL(sec, key, field)                                                        \
  KeyDef{sec, key, [](RunConfig &c, const std::string &v) { c.field = parse_real(v); },  \
         [](const RunConfig &c) { return format_real(c.field); }}
#define MHD_OPT_REAL(sec, key, field)                                                    \
  KeyDef{sec, key, [](RunConfig &c, const std::string &v) { c.field = parse_real(v); },  \
         [](const RunConfig &c) { return c.field ? format_real(*c.field) : std::string(); }}
#define MHD_BOOL(sec, key, field)                                                        \
  KeyDef{sec, key, [](RunConfig &c, const std::string &v) { c.field = parse_bool(v); },  \
         [](const RunConfig &c) { return std::string(c.field ? "true" : "false"); }}
#define MHD_STR(sec, key, field)                                                         \
  KeyDef{sec, key, [](RunConfig &c, const std::string &v) { c.field = v; },              \
         [](const RunConfig &c) { return c.field; }}

const std::vector<KeyDef> &registry() {
  static const std::vector<KeyDef> defs = {
      KeyDef{"run", "problem",
             [](RunConfig &c, const std::string &v) {
               static const std::vector<std::string> ok{"mms", "island", "hmkh", "cavity", "generic"};
               if (std::find(ok.begin(), ok.end(), v) == ok.end())
                 throw ValueError{"expects one of mms, island, hmkh, cavity, generic, got '" + v + "'"};
               c.problem = v;
             },
             [](const RunConfig &c) { return c.problem; }},
      MHD_STR("run", "output_dir", output_dir),
      MHD_INT("run", "seed", seed, std::uint64_t),
      MHD_BOOL("run", "timing", timing),
      MHD_INT("run", "vtk_every", vtk_every, int),

      MHD_INT("mesh", "nx", nx, Index),
      MHD_INT("mesh", "ny", ny, Index),
      MHD_INT("mesh", "p", p, int),
      MHD_REAL("mesh", "grading", grading),

      MHD_OPT_REAL("physics", "lundquist", lundquist),
      MHD_OPT_REAL("physics", "re", re),
      MHD_OPT_REAL("physics", "rm", rm),
      MHD_OPT_REAL("physics", "kappa", kappa),
      MHD_OPT_REAL("physics", "xi", xi),
      MHD_REAL("physics", "epsilon", epsilon),
      MHD_REAL("physics", "sigma", sigma),
      MHD_REAL("physics", "b0", b0),
      MHD_REAL("physics", "delta", delta),

      MHD_REAL("time", "dt", dt),
      MHD_REAL("time", "t_end", t_end),
      MHD_INT("time", "steps", steps, int),
      MHD_BOOL("time", "adaptive", adaptive),
      MHD_REAL("time", "min_dt", min_dt),

      KeyDef{"solver", "preconditioner",
             [](RunConfig &c, const std::string &v) { c.picard.linear.preconditioner = parse_precond(v); },
             [](const RunConfig &c) { return precond::to_string(c.picard.linear.preconditioner); }},
      KeyDef{"solver", "tolerance_mode",
             [](RunConfig &c, const std::string &v) {
               if (v == "relative") c.picard.linear.mode = driver::ToleranceMode::relative;
               else if (v == "absolute") c.picard.linear.mode = driver::ToleranceMode::absolute;
               else throw ValueError{"expects relative or absolute, got '" + v + "'"};
             },
             [](const RunConfig &c) {
               return std::string(c.picard.linear.mode == driver::ToleranceMode::relative ? "relative"
                                                                                          : "absolute");
             }},
      MHD_REAL("solver", "rtol", picard.linear.relative_tolerance),
      MHD_REAL("solver", "atol", picard.linear.absolute_tolerance),
      MHD_INT("solver", "max_iterations", picard.linear.max_iterations, Index),
      MHD_BOOL("solver", "direct", picard.linear.direct),
      MHD_BOOL("solver", "flexible", picard.linear.force_flexible),
      MHD_INT("solver", "ilu_steps", picard.linear.ilu_steps, Index),
      MHD_INT("solver", "pre_smoothing", picard.linear.amg.pre_smoothing, Index),
      MHD_INT("solver", "post_smoothing", picard.linear.amg.post_smoothing, Index),
      MHD_INT("solver", "coarse_threshold", picard.linear.amg.coarse_threshold, Index),
      MHD_INT("solver", "max_levels", picard.linear.amg.max_levels, Index),
      MHD_REAL("solver", "jacobi_damping", picard.linear.amg.smoother.jacobi_damping),
      MHD_REAL("solver", "chebyshev_ratio", picard.linear.amg.smoother.chebyshev_ratio),
      MHD_INT("solver", "power_iterations", picard.linear.amg.smoother.power_iterations, Index),

      MHD_REAL("picard", "eps_a", picard.eps_a),
      MHD_REAL("picard", "eps_r", picard.eps_r),
      MHD_INT("picard", "max_iterations", picard.max_picard, int),

      KeyDef{"mms", "meshes",
             [](RunConfig &c, const std::string &v) {
               c.mms_meshes.clear();
               for (const auto &s : split_list(v)) c.mms_meshes.push_back(parse_integer<Index>(s));
             },
             [](const RunConfig &c) {
               return join<Index>(c.mms_meshes, [](const Index &x) { return std::to_string(x); });
             }},
      KeyDef{"mms", "degrees",
             [](RunConfig &c, const std::string &v) {
               c.mms_degrees.clear();
               for (const auto &s : split_list(v)) c.mms_degrees.push_back(parse_integer<int>(s));
             },
             [](const RunConfig &c) {
               return join<int>(c.mms_degrees, [](const int &x) { return std::to_string(x); });
             }},
      KeyDef{"robustness", "lundquist",
             [](RunConfig &c, const std::string &v) {
               c.robustness_lundquist.clear();
               for (const auto &s : split_list(v)) c.robustness_lundquist.push_back(parse_real(s));
             },
             [](const RunConfig &c) {
               return join<double>(c.robustness_lundquist, [](const double &x) { return format_real(x); });
             }},
      KeyDef{"compare", "preconditioners",
             [](RunConfig &c, const std::string &v) {
               c.compare_preconditioners.clear();
               for (const auto &s : split_list(v)) c.compare_preconditioners.push_back(parse_precond(s));
             },
             [](const RunConfig &c) {
               return join<PreconditionerId>(c.compare_preconditioners,
                                             [](const PreconditionerId &x) { return precond::to_string(x); });
             }},

      MHD_STR("generic", "matrix", matrix),
      MHD_STR("generic", "rhs", rhs),
      KeyDef{"generic", "blocks",
             [](RunConfig &c, const std::string &v) {
               c.blocks.clear();
               for (const auto &s : split_list(v)) c.blocks.push_back(parse_integer<Index>(s));
               if (c.blocks.size() != 2) throw ValueError{"expects two block sizes 'velocity,pressure'"};
             },
             [](const RunConfig &c) {
               return join<Index>(c.blocks, [](const Index &x) { return std::to_string(x); });
             }},
      MHD_INT("generic", "node_size", node_size, Index),
  };
  return defs;
}

#undef MHD_INT
#undef MHD_REAL
#undef MHD_OPT_REAL
#undef MHD_BOOL
#undef MHD_STR

const KeyDef *find_key(const std::string &section, const std::string &name) {
  for (const auto &d : registry())
    if (section == d.section && name == d.name) return &d;
  return nullptr;
}

void set_key(RunConfig &cfg, const KeyDef &def, const std::string &value, const std::string &source,
             int line) {
  try {
    def.set(cfg, value);
  } catch (const ValueError &e) {
    throw ConfigError(source, line, std::string(def.section) + "." + def.name + " " + e.message);
  }
  cfg.explicit_keys.insert(std::string(def.section) + "." + def.name);
}

void require(bool ok, const std::string &key, const std::string &what) {
  if (!ok) throw ConfigError("<resolved config>", 0, key + " " + what);
}

} // namespace

ConfigError::ConfigError(const std::string &source, int line, const std::string &what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

Subcommand parse_subcommand(const std::string &name) {
  if (name == "mms") return Subcommand::mms;
  if (name == "solve") return Subcommand::solve;
  if (name == "robustness") return Subcommand::robustness;
  if (name == "compare") return Subcommand::compare;
  if (name == "generic") return Subcommand::generic;
  throw std::invalid_argument("unknown subcommand '" + name + "'");
}

std::string to_string(Subcommand s) {
  switch (s) {
  case Subcommand::mms: return "mms";
  case Subcommand::solve: return "solve";
  case Subcommand::robustness: return "robustness";
  case Subcommand::compare: return "compare";
  case Subcommand::generic: return "generic";
  }
  return "?";
}

RunConfig parse_config(std::istream &in, const std::string &source) {
  RunConfig cfg;
  std::string section = "run";
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto cut = raw.find_first_of("#;");
    const std::string text = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3)
        throw ConfigError(source, line, "malformed section header '" + text + "'");
      section = trim(text.substr(1, text.size() - 2));
      const bool known = std::any_of(registry().begin(), registry().end(),
                                     [&](const KeyDef &d) { return section == d.section; });
      if (!known) throw ConfigError(source, line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected key = value, got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line, "missing key before '='");
    const KeyDef *def = find_key(section, key);
    if (!def) throw ConfigError(source, line, "unknown key '" + key + "' in [" + section + "]");
    if (cfg.is_set(section + "." + key))
      throw ConfigError(source, line, "duplicate key '" + key + "' in [" + section + "]");
    set_key(cfg, *def, value, source, line);
  }
  return cfg;
}

RunConfig parse_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse_config(in, path);
}

void apply_override(RunConfig &cfg, const std::string &key, const std::string &value) {
  const std::string source = "--" + key;
  const KeyDef *def = nullptr;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    def = find_key(key.substr(0, dot), key.substr(dot + 1));
  } else {
    for (const auto &d : registry()) {
      if (key != d.name) continue;
      if (def)
        throw ConfigError(source, 0,
                          "ambiguous key; use " + std::string(def->section) + "." + key + " or " +
                              d.section + "." + key);
      def = &d;
    }
  }
  if (!def) throw ConfigError(source, 0, "unknown key");
  set_key(cfg, *def, value, source, 0);
}

void resolve(RunConfig &cfg) {
  auto &lin = cfg.picard.linear;
  if (cfg.ny == 0) cfg.ny = cfg.nx;
  if (cfg.problem == "hmkh" && !cfg.is_set("solver.tolerance_mode")) lin.mode = driver::ToleranceMode::absolute;
  cfg.outer_solver = lin.direct ? "direct"
                     : (lin.force_flexible || lin.preconditioner == precond::PreconditionerId::bfbt_amg_gmres)
                         ? "fgmres"
                         : "gmres";

  require(cfg.nx > 0 && cfg.ny > 0, "mesh.nx/ny", "must be positive");
  require(cfg.p >= 1, "mesh.p", "must be at least 1");
  require(cfg.grading >= 0.0, "mesh.grading", "must be non-negative");
  require(cfg.vtk_every >= 0, "run.vtk_every", "must be non-negative");
  require(!cfg.output_dir.empty(), "run.output_dir", "must not be empty");
  for (const auto &[key, v] : {std::pair{"physics.lundquist", cfg.lundquist}, std::pair{"physics.re", cfg.re},
                               std::pair{"physics.rm", cfg.rm}, std::pair{"physics.kappa", cfg.kappa}})
    require(!v || *v > 0.0, key, "must be positive");
  require(!cfg.xi || (*cfg.xi >= 0.0 && *cfg.xi <= 1.0), "physics.xi", "must lie in [0, 1]");
  require(cfg.epsilon > 0.0 && cfg.epsilon < 1.0, "physics.epsilon", "must lie in (0, 1)");
  require(cfg.sigma >= 0.0, "physics.sigma", "must be non-negative");
  require(cfg.delta > 0.0, "physics.delta", "must be positive");
  require(cfg.dt > 0.0, "time.dt", "must be positive");
  require(cfg.t_end >= 0.0, "time.t_end", "must be non-negative");
  require(cfg.steps >= 1, "time.steps", "must be at least 1");
  require(cfg.min_dt > 0.0, "time.min_dt", "must be positive");
  require(lin.relative_tolerance > 0.0, "solver.rtol", "must be positive");
  require(lin.absolute_tolerance > 0.0, "solver.atol", "must be positive");
  require(lin.max_iterations >= 0, "solver.max_iterations", "must be non-negative");
  require(lin.ilu_steps >= 1, "solver.ilu_steps", "must be at least 1");
  require(lin.amg.pre_smoothing >= 0 && lin.amg.post_smoothing >= 0, "solver.pre/post_smoothing",
          "must be non-negative");
  require(lin.amg.coarse_threshold >= 1, "solver.coarse_threshold", "must be at least 1");
  require(lin.amg.max_levels >= 1, "solver.max_levels", "must be at least 1");
  require(cfg.picard.eps_a >= 0.0 && cfg.picard.eps_r >= 0.0 && cfg.picard.eps_a + cfg.picard.eps_r > 0.0,
          "picard.eps_a/eps_r", "must be non-negative and not both zero");
  require(cfg.picard.max_picard >= 1, "picard.max_iterations", "must be at least 1");
  for (Index n : cfg.mms_meshes) require(n > 0, "mms.meshes", "entries must be positive");
  for (int d : cfg.mms_degrees) require(d >= 1, "mms.degrees", "entries must be at least 1");
  for (double s : cfg.robustness_lundquist) require(s > 0.0, "robustness.lundquist", "entries must be positive");
  require(cfg.node_size >= 1 && cfg.node_size <= 4, "generic.node_size", "must lie in [1, 4]");
  for (Index b : cfg.blocks) require(b >= 0, "generic.blocks", "entries must be non-negative");
  if (cfg.problem == "generic") {
    require(!cfg.matrix.empty(), "generic.matrix", "is required for the generic problem");
    require(std::filesystem::is_regular_file(cfg.matrix), "generic.matrix", "file '" + cfg.matrix + "' not found");
    require(cfg.rhs.empty() || std::filesystem::is_regular_file(cfg.rhs), "generic.rhs",
            "file '" + cfg.rhs + "' not found");
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig &cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &d : registry()) out.emplace_back(std::string(d.section) + "." + d.name, d.get(cfg));
  return out;
}

} // namespace mhdtrace::app
