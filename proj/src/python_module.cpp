#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mhdtrace/app.hpp"

namespace py = pybind11;
using namespace mhdtrace;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<Index, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const DoubleArray &a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

py::array_t<double> to_numpy(const Vector &v) { return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data()); }

template <class T>
std::vector<T> to_vector(const py::array_t<T, py::array::c_style | py::array::forcecast> &a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

app::RunConfig config_from(const std::string &text, const std::map<std::string, std::string> &overrides) {
  std::istringstream in(text);
  auto cfg = app::parse_config(in, "<python>");
  for (const auto &[k, v] : overrides) app::apply_override(cfg, k, v);
  app::resolve(cfg);
  return cfg;
}

py::dict step_dict(const driver::StepRecord &s) {
  py::dict d;
  d["step"] = s.step;
  d["t"] = s.t;
  d["dt"] = s.dt;
  d["picard_iterations"] = s.picard_iterations;
  d["linear_iterations"] = s.linear_iterations;
  d["linear_converged"] = s.linear_converged;
  d["wall_seconds"] = s.wall_seconds;
  d["max_flux_ratio"] = s.max_flux_ratio;
  d["max_pressure_mean"] = s.max_pressure_mean;
  return d;
}

} // namespace

PYBIND11_MODULE(_mhdtrace, m) {
  m.doc() = "HDG resistive MHD trace solver with block preconditioners";
  m.attr("__version__") = app::kVersion;

  py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SparseMatrixCsr>(m, "SparseMatrix")
      .def(py::init([](Index nrows, Index ncols, const IndexArray &indptr, const IndexArray &indices,
                       const DoubleArray &data) {
             return SparseMatrixCsr(nrows, ncols, to_vector(indptr), to_vector(indices), to_vector(data));
           }),
           py::arg("nrows"), py::arg("ncols"), py::arg("indptr"), py::arg("indices"), py::arg("data"))
      .def_static("from_dense",
                  [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a) {
                    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
                    return SparseMatrixCsr::from_dense(a.shape(0), a.shape(1),
                                                       {a.data(), static_cast<std::size_t>(a.size())});
                  })
      .def_static("identity", &SparseMatrixCsr::identity)
      .def_property_readonly("shape", [](const SparseMatrixCsr &a) { return py::make_tuple(a.nrows(), a.ncols()); })
      .def_property_readonly("nnz", &SparseMatrixCsr::nnz)
      .def_property_readonly("indptr", [](const SparseMatrixCsr &a) {
        const auto &v = a.row_offsets();
        return py::array_t<Index>(static_cast<py::ssize_t>(v.size()), v.data());
      })
      .def_property_readonly("indices", [](const SparseMatrixCsr &a) {
        const auto &v = a.col_indices();
        return py::array_t<Index>(static_cast<py::ssize_t>(v.size()), v.data());
      })
      .def_property_readonly("data", [](const SparseMatrixCsr &a) { return to_numpy(Vector(a.values().begin(), a.values().end())); })
      .def("__matmul__", [](const SparseMatrixCsr &a, const DoubleArray &x) { return to_numpy(spmv(a, as_span(x))); })
      .def("transpose", [](const SparseMatrixCsr &a) { return transpose(a); });

  m.def("read_matrix_market", py::overload_cast<const std::string &>(&read_matrix_market), py::arg("path"));
  m.def("write_matrix_market", py::overload_cast<const std::string &, const SparseMatrixCsr &>(&write_matrix_market),
        py::arg("path"), py::arg("matrix"));

  m.def(
      "stabilization",
      [](double w_dot_n) {
        const auto s = hdg::stabilization(w_dot_n);
        return py::make_tuple(s.tau_t, s.tau_n);
      },
      py::arg("w_dot_n"), "(tau_t, tau_n) for the normal advection speed w.n");

  m.def(
      "picard_metric",
      [](const DoubleArray &delta, const DoubleArray &current, double eps_a, double eps_r) {
        driver::PicardConfig cfg;
        cfg.eps_a = eps_a;
        cfg.eps_r = eps_r;
        return driver::picard_metric(as_span(delta), as_span(current), cfg);
      },
      py::arg("delta"), py::arg("current"), py::arg("eps_a") = 1e-6, py::arg("eps_r") = 1e-4);

  m.def(
      "bfbt_apply",
      [](const SparseMatrixCsr &f, const SparseMatrixCsr &b, const DoubleArray &r) {
        const SparseMatrixCsr bt = transpose(b);
        const precond::BfbtSchur s(f, b, bt);
        return to_numpy(s.apply(as_span(r)));
      },
      py::arg("f"), py::arg("b"), py::arg("r"), "Approximate Schur inverse action (B B^T)^-1 B F B^T (B B^T)^-1 r");

  m.def(
      "solve",
      [](const SparseMatrixCsr &a, const DoubleArray &b, const std::string &preconditioner,
         std::vector<Index> blocks, Index node_size, double rtol, Index max_iterations) {
        driver::LinearSolverConfig lin;
        lin.preconditioner = precond::parse_preconditioner_id(preconditioner);
        lin.relative_tolerance = rtol;
        lin.max_iterations = max_iterations;
        const auto res = app::generic_solve(a, as_span(b), blocks, node_size, lin);
        py::dict d;
        d["x"] = to_numpy(res.x);
        d["iterations"] = res.history.iterations;
        d["converged"] = res.history.converged;
        d["relative_residuals"] = res.history.relative_residuals;
        d["true_relative_residual"] = res.history.true_relative_residual;
        d["method"] = res.method;
        return d;
      },
      py::arg("matrix"), py::arg("rhs"), py::arg("preconditioner") = "dd-ilu0",
      py::arg("blocks") = std::vector<Index>{}, py::arg("node_size") = 1, py::arg("rtol") = 1e-6,
      py::arg("max_iterations") = 0,
      "Preconditioned (F)GMRES; `blocks` = (velocity, pressure) sizes for the block preconditioners.");

  m.def(
      "resolve_config",
      [](const std::string &text, const std::map<std::string, std::string> &overrides) {
        const auto cfg = config_from(text, overrides);
        py::dict d;
        for (const auto &[k, v] : app::config_entries(cfg)) d[py::str(k)] = v;
        d["resolved.outer_solver"] = cfg.outer_solver;
        return d;
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Parses INI-style text plus overrides and returns every resolved key.");

  m.def(
      "run_case",
      [](const std::string &text, const std::map<std::string, std::string> &overrides) {
        const auto cfg = config_from(text, overrides);
        double u_norm = 0.0;
        const auto c = app::run_case(cfg, app::make_problem(cfg), cfg.picard.linear, cfg.problem,
                                     [&](const driver::Discretization &disc, const driver::StepRecord &,
                                         const driver::SolutionState &s) {
                                       u_norm = hdg::l2_norm(disc.mesh, disc.basis, s.volume, hdg::c_ux, 2);
                                     });
        py::dict d;
        py::list steps;
        for (const auto &s : c.steps) steps.append(step_dict(s));
        d["steps"] = steps;
        d["avg_linear"] = c.avg_linear;
        d["avg_linear_excl_first"] = c.avg_linear_excl_first;
        d["avg_picard"] = c.avg_picard;
        d["converged"] = c.converged;
        d["failure"] = c.failure;
        d["u_norm"] = u_norm;
        return d;
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs the configured problem once and returns per-step statistics.");

  m.def(
      "mms_rates",
      [](const std::string &text, const std::map<std::string, std::string> &overrides) {
        const auto cfg = config_from(text, overrides);
        const auto rows = app::mms_study(cfg);
        py::dict out;
        for (int p : cfg.mms_degrees) {
          std::vector<double> h;
          std::map<std::string, std::vector<double>> err;
          for (const auto &r : rows) {
            if (r.p != p) continue;
            h.push_back(r.h);
            err["u"].push_back(r.errors.u);
            err["b"].push_back(r.errors.b);
            err["L"].push_back(r.errors.l);
            err["J"].push_back(r.errors.j);
            err["q"].push_back(r.errors.q);
            err["r"].push_back(r.errors.r);
          }
          py::dict rates;
          for (const auto &[name, e] : err) rates[py::str(name)] = app::observed_rate(h, e);
          out[py::int_(p)] = rates;
        }
        return out;
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Least-squares L2 rates per degree over the configured meshes.");

  m.def(
      "run",
      [](const std::string &subcommand, const std::string &text, const std::map<std::string, std::string> &overrides) {
        const auto sub = app::parse_subcommand(subcommand);
        std::istringstream in(text);
        auto cfg = app::parse_config(in, "<python>");
        if (sub == app::Subcommand::generic && !cfg.is_set("run.problem")) cfg.problem = "generic";
        for (const auto &[k, v] : overrides) app::apply_override(cfg, k, v);
        app::resolve(cfg);
        std::ostringstream log;
        const auto out = app::run(sub, cfg, log);
        return py::make_tuple(out.exit_code, out.outputs, log.str());
      },
      py::arg("subcommand"), py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Same as the command-line tool; returns (exit_code, outputs, log).");
}
