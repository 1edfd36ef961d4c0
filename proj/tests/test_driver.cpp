#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mhdtrace/driver.hpp"

using namespace mhdtrace;
using namespace mhdtrace::driver;
using Vec2 = std::array<double, 2>;

namespace {

constexpr double pi = std::numbers::pi;

ProblemSpec uniform_problem() {
  ProblemSpec p;
  p.name = "uniform";
  p.params = {.re = 10.0, .rm = 10.0, .kappa = 1.0};
  const hdg::VectorField u = [](double, double) { return Vec2{0.4, -0.3}; };
  const hdg::VectorField b = [](double, double) { return Vec2{1.0, 0.2}; };
  p.u0 = u;
  p.b0 = b;
  p.f = [](double, double) { return Vec2{}; };
  p.g = p.f;
  for (auto &s : p.boundary.sides) {
    s.kind = hdg::BoundaryKind::dirichlet;
    s.velocity = u;
    s.magnetic = b;
  }
  return p;
}

PicardConfig direct_config() {
  PicardConfig cfg;
  cfg.linear.direct = true;
  return cfg;
}

} // namespace

TEST_CASE("picard metric examples") {
  const PicardConfig cfg;
  CHECK(cfg.eps_a == 1e-6);
  CHECK(cfg.eps_r == 1e-4);
  CHECK(cfg.max_picard == 20);
  const double one[] = {1.0}, d1[] = {1e-5};
  const double m = picard_metric(d1, one, cfg);
  CHECK(m == doctest::Approx(1e-5 / (1e-4 + 1e-6)).epsilon(1e-14));
  CHECK(m == doctest::Approx(0.09901).epsilon(1e-4));
  const double zero[] = {0.0};
  CHECK(picard_metric(zero, one, cfg) == 0.0);
  const double chi[] = {0.0, 0.0}, dchi[] = {1e-6, 1e-6};
  const double boundary = picard_metric(dchi, chi, cfg);
  CHECK(boundary == 1.0);
  CHECK_FALSE(boundary < 1.0);
  CHECK_THROWS_AS(picard_metric(d1, chi, cfg), DimensionError);
}

TEST_CASE("picard metric is scale aware: exact invariance at eps_a = 0") {
  PicardConfig cfg;
  cfg.eps_a = 0.0;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Vector d(17), x(17), d10(17), x10(17);
    for (int i = 0; i < 17; ++i) {
      d[i] = U(rng);
      x[i] = U(rng);
      d10[i] = 10.0 * d[i];
      x10[i] = 10.0 * x[i];
    }
    CHECK(picard_metric(d10, x10, cfg) == doctest::Approx(picard_metric(d, x, cfg)).epsilon(1e-14));
  }
}

TEST_CASE("config validation") {
  PicardConfig p;
  p.eps_a = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.max_picard = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  TimeConfig t;
  t.dt0 = 0.0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = {};
  t.steps = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("island problem values") {
  const IslandOptions opt;
  CHECK(opt.epsilon == 0.2);
  CHECK(opt.sigma == 1e-3);
  const auto prob = island_problem(opt);
  CHECK(prob.params.re == 1e3);
  CHECK(prob.params.rm == 1e3);
  CHECK(prob.params.kappa == 1.0);
  CHECK(prob.periodic_x);
  CHECK_FALSE(prob.periodic_y);
  const auto b00 = prob.b0(0.0, 0.0);
  CHECK(b00[0] == 0.0);
  CHECK(b00[1] == 0.0);
  const auto b = island_field(0.25, 0.0, 0.2);
  CHECK(std::abs(b[0]) <= 1e-15);
  CHECK(b[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(island_current(0.0, 0.0, opt, 1e3) == doctest::Approx(-4.188790e-3).epsilon(1e-6));
  CHECK(island_current(0.0, 0.0, opt, 1.0) == doctest::Approx(-2.0 * pi * 0.96 / 1.44).epsilon(1e-14));
  const auto db = island_perturbation(0.25, 0.5, 1e-3);
  CHECK(db[0] == doctest::Approx(7.853982e-4).epsilon(1e-6));
  CHECK(db[1] == doctest::Approx(-1.570796e-3).epsilon(1e-6));
  const auto g0 = prob.g(0.0, 0.0);
  CHECK(std::abs(g0[0]) <= 1e-15);
  CHECK(std::abs(g0[1]) <= 1e-15);
  CHECK_THROWS_AS(island_problem({.lundquist = 0.0}), std::invalid_argument);
  for (int s : {0, 2}) CHECK(prob.boundary.sides[s].kind == hdg::BoundaryKind::mirror_conductor);
  for (int s : {1, 3}) CHECK(prob.boundary.sides[s].kind == hdg::BoundaryKind::periodic);
}

TEST_CASE("island forcing is the curl of the equilibrium current (finite-difference oracle)") {
  const IslandOptions opt{.lundquist = 50.0};
  const auto prob = island_problem(opt);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    const double x = U(rng), y = U(rng);
    auto j = [&](double a, double b) { return island_current(a, b, opt, prob.params.rm); };
    const double djdy = (j(x, y + h) - j(x, y - h)) / (2 * h);
    const double djdx = (j(x + h, y) - j(x - h, y)) / (2 * h);
    const auto g = prob.g(x, y);
    const double scale = std::abs(djdx) + std::abs(djdy) + 1e-12;
    CHECK(std::abs(g[0] - djdy) <= 1e-6 * scale);
    CHECK(std::abs(g[1] + djdx) <= 1e-6 * scale);
    // J0 = (kappa / Rm) curl b0 of the unperturbed field.
    auto bx = [&](double a, double b) { return island_field(a, b, opt.epsilon)[0]; };
    auto by = [&](double a, double b) { return island_field(a, b, opt.epsilon)[1]; };
    const double curl = (by(x + h, y) - by(x - h, y)) / (2 * h) - (bx(x, y + h) - bx(x, y - h)) / (2 * h);
    CHECK(j(x, y) == doctest::Approx(opt.kappa / prob.params.rm * curl).epsilon(1e-6));
  }
}

TEST_CASE("hmkh problem values") {
  const auto prob = hmkh_problem();
  CHECK(prob.b0(1.3, 0.1)[0] == doctest::Approx(0.3333 * std::tanh(1.0)).epsilon(1e-15));
  CHECK(prob.b0(1.3, 0.1)[0] == doctest::Approx(0.253839).epsilon(1e-6));
  CHECK(prob.b0(1.3, 0.1)[1] == 0.0);
  const auto u = prob.u0(2.0, -0.5);
  CHECK(u[0] == -1.0);
  CHECK(u[1] == 0.0);
  CHECK(prob.u0(2.0, 0.5)[0] == 1.0);
  CHECK(1.0 / HmkhOptions{}.b0 == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(prob.params.re == 1e4);
  CHECK(prob.params.rm == 1e4);
  CHECK(prob.tolerance_mode == ToleranceMode::absolute);
  CHECK(prob.bounds.x1 - prob.bounds.x0 == 4.0);
  CHECK(prob.bounds.y1 - prob.bounds.y0 == 4.0);
  for (int s : {0, 2}) {
    CHECK(prob.boundary.sides[s].kind == hdg::BoundaryKind::mirror_conductor);
    CHECK(prob.boundary.sides[s].fix_tangential_b);
  }
}

TEST_CASE("cavity problem values") {
  const auto prob = cavity_problem();
  CHECK(prob.params.hartmann() == doctest::Approx(1000.0).epsilon(1e-14));
  // Lid wins at both top corners, on every side's data.
  for (const auto &s : prob.boundary.sides) {
    CHECK(s.velocity(-0.5, 0.5)[0] == 1.0);
    CHECK(s.velocity(0.5, 0.5)[0] == 1.0);
    CHECK(s.velocity(0.5, 0.4999)[0] == 0.0);
    CHECK(s.magnetic(0.1, -0.5)[0] == -1.0);
  }
  // Zero initial state and forcing: the only source is the boundary lift.
  const auto disc = make_discretization(prob, 3, 3, 1);
  const auto init = initial_state(disc);
  hdg::AssemblyInputs in{.picard = &init.volume, .previous = &init.volume, .dt = 0.05, .f = prob.f, .g = prob.g};
  const auto sys = hdg::assemble_trace_system(disc.mesh, disc.basis, prob.params, in);
  for (double v : sys.rhs) CHECK(v == 0.0);
  const auto red = hdg::apply_boundary_conditions(sys, disc.mesh, disc.basis, prob.boundary);
  CHECK(norm2(red.rhs) > 0.0);
}

TEST_CASE("manufactured forcing leaves zero strong residual (closed-form oracle)") {
  const hdg::MhdParams prm{.re = 3.0, .rm = 2.0, .kappa = 0.6};
  const auto prob = mms_problem(prm);
  REQUIRE(prob.exact);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double x = U(rng), y = U(rng);
    const double sx = std::sin(pi * x), cx = std::cos(pi * x), sy = std::sin(pi * y), cy = std::cos(pi * y);
    const double u[2] = {sx * cy, -cx * sy};
    const double du[2][2] = {{pi * cx * cy, -pi * sx * sy}, {pi * sx * sy, -pi * cx * cy}};
    const double X = pi * x + 0.3, Y = pi * y + 0.7;
    const double b[2] = {std::sin(X) * std::cos(Y), -std::cos(X) * std::sin(Y)};
    const double db[2][2] = {{pi * std::cos(X) * std::cos(Y), -pi * std::sin(X) * std::sin(Y)},
                             {pi * std::sin(X) * std::sin(Y), -pi * std::cos(X) * std::cos(Y)}};
    const double c = 2.0 * pi * std::sin(X) * std::sin(Y);
    const double dc[2] = {2.0 * pi * pi * std::cos(X) * std::sin(Y), 2.0 * pi * pi * std::sin(X) * std::cos(Y)};
    const double gq[2] = {-pi * sx * std::sin(pi * y + 0.2), pi * cx * std::cos(pi * y + 0.2)};
    // Solenoidal by construction.
    CHECK(std::abs(du[0][0] + du[1][1]) <= 1e-14);
    CHECK(std::abs(db[0][0] + db[1][1]) <= 1e-14);
    const auto f = prob.f(x, y);
    const double lorentz[2] = {prm.kappa * c * b[1], -prm.kappa * c * b[0]};
    for (int i = 0; i < 2; ++i) {
      const double conv = u[0] * du[i][0] + u[1] * du[i][1];
      const double visc = 2.0 * pi * pi * u[i] / prm.re;  // -lap u / Re
      CHECK(std::abs(f[i] - (conv + gq[i] + visc + lorentz[i])) <= 1e-10);
    }
    // a = u x b and its gradient.
    double da[2];
    for (int k = 0; k < 2; ++k) da[k] = du[0][k] * b[1] + u[0] * db[1][k] - du[1][k] * b[0] - u[1] * db[0][k];
    const auto g = prob.g(x, y);
    CHECK(std::abs(g[0] - (-prm.kappa * da[1] + prm.kappa / prm.rm * dc[1])) <= 1e-10);
    CHECK(std::abs(g[1] - (prm.kappa * da[0] - prm.kappa / prm.rm * dc[0])) <= 1e-10);
    // Exact fields agree with the oracle.
    const auto eu = prob.exact->u(x, y), eb = prob.exact->b(x, y);
    CHECK(std::abs(eu[0] - u[0]) + std::abs(eu[1] - u[1]) <= 1e-14);
    CHECK(std::abs(eb[0] - b[0]) + std::abs(eb[1] - b[1]) <= 1e-14);
    CHECK(prob.exact->j(x, y) == doctest::Approx(prm.kappa / prm.rm * c).epsilon(1e-13));
    const auto l = prob.exact->l(x, y);
    CHECK(l[1] == doctest::Approx(du[0][1] / prm.re).epsilon(1e-13));
  }
}

TEST_CASE("steady fixed point: one step from the exact discrete state is unchanged") {
  const auto disc = make_discretization(uniform_problem(), 3, 2, 2);
  auto first = picard_solve(disc, initial_state(disc), 0.0, direct_config());
  REQUIRE(first.stats.converged);
  TimeConfig tc;
  tc.steps = 1;
  const auto traj = advance_time(disc, first.state, tc, direct_config());
  REQUIRE(traj.steps.size() == 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < first.state.volume.data.size(); ++i)
    diff = std::max(diff, std::abs(traj.final_state.volume.data[i] - first.state.volume.data[i]));
  CHECK(diff <= 1e-10);
  CHECK(traj.steps[0].picard_iterations == 1);
}

TEST_CASE("a linear problem converges in at most two Picard iterations") {
  // u = b = 0 with a linear pressure: the discrete solution keeps u = b = 0,
  // so the frozen fields never change after the first solve.
  ProblemSpec p;
  p.f = [](double, double) { return Vec2{1.0, 1.0}; };
  p.g = [](double, double) { return Vec2{}; };
  for (auto &s : p.boundary.sides) {
    s.kind = hdg::BoundaryKind::dirichlet;
    s.velocity = p.g;
    s.magnetic = p.g;
  }
  const auto disc = make_discretization(p, 4, 4, 1);
  const auto res = picard_solve(disc, initial_state(disc), 0.0, direct_config());
  CHECK(res.stats.converged);
  CHECK(res.stats.iterations <= 2);
  CHECK(hdg::l2_norm(disc.mesh, disc.basis, res.state.volume, hdg::c_ux, 2) <= 1e-12);
}

TEST_CASE("steady MMS 8x8 p=2 converges within 10 Picard iterations") {
  const auto prob = mms_problem();
  const auto disc = make_discretization(prob, 8, 8, 2);
  const auto res = picard_solve(disc, initial_state(disc), 0.0, direct_config());
  CHECK(res.stats.converged);
  CHECK(res.stats.iterations <= 10);
  CHECK(res.stats.max_flux_ratio <= 1e-8);
  CHECK(res.stats.max_pressure_mean <= 1e-12);
}

TEST_CASE("adaptive halving: injected failure gives 0.05 then 0.025, never increased") {
  const auto disc = make_discretization(uniform_problem(), 2, 2, 1);
  TimeConfig tc;
  tc.steps = 4;
  TimeHooks hooks;
  hooks.inject_failure = [](int step, int attempt, double) { return step == 1 && attempt == 0; };
  const auto traj = advance_time(disc, initial_state(disc), tc, direct_config(), hooks);
  REQUIRE(traj.attempted_dt.size() >= 2);
  CHECK(traj.attempted_dt[0] == 0.05);
  CHECK(traj.attempted_dt[1] == 0.025);
  for (std::size_t i = 1; i < traj.attempted_dt.size(); ++i)
    CHECK(traj.attempted_dt[i] <= traj.attempted_dt[i - 1]);
  REQUIRE(traj.steps.size() == 4);
  for (const auto &s : traj.steps) CHECK(s.dt == 0.025);
  CHECK(traj.final_time == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("dt underflow aborts with a diagnostic") {
  const auto disc = make_discretization(uniform_problem(), 1, 1, 1);
  TimeConfig tc;
  TimeHooks hooks;
  hooks.inject_failure = [](int, int, double) { return true; };
  CHECK_THROWS_AS(advance_time(disc, initial_state(disc), tc, direct_config(), hooks), TimeStepUnderflow);
  tc.adaptive = false;
  CHECK_THROWS_AS(advance_time(disc, initial_state(disc), tc, direct_config(), hooks), std::runtime_error);
}

TEST_CASE("t_end mode clips the last step") {
  const auto disc = make_discretization(uniform_problem(), 1, 1, 1);
  TimeConfig tc;
  tc.t_end = 0.12;
  const auto traj = advance_time(disc, initial_state(disc), tc, direct_config());
  REQUIRE(traj.steps.size() == 3);
  CHECK(traj.steps[2].dt == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(traj.final_time == doctest::Approx(0.12).epsilon(1e-14));
}

TEST_CASE("six-step island run emits six averaged rows") {
  const auto prob = island_problem({.lundquist = 100.0});
  const auto disc = make_discretization(prob, 4, 4, 1);
  PicardConfig cfg;  // bfbt-amg-gmres
  TimeConfig tc;
  tc.dt0 = 0.1;
  tc.steps = 6;
  int seen = 0;
  TimeHooks hooks;
  hooks.on_step = [&](const StepRecord &r, const SolutionState &) {
    ++seen;
    CHECK(r.step == seen);
    CHECK(r.max_flux_ratio <= 1e-8);
    CHECK(r.max_pressure_mean <= 1e-12);
    CHECK(r.linear_converged);
  };
  const auto traj = advance_time(disc, initial_state(disc), tc, cfg, hooks);
  CHECK(seen == 6);
  std::ostringstream os;
  write_steps_csv(os, traj.steps);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "step,t,dt,picard_iters,avg_linear_iters,avg_linear_iters_excl_first,wall_time");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("step averages with and without the first Picard iteration of step 1") {
  StepRecord r;
  r.step = 1;
  r.linear_iterations = {20, 4, 6};
  CHECK(r.average_linear() == 10.0);
  CHECK(r.average_linear_excluding_first() == 5.0);
  r.step = 2;
  CHECK(r.average_linear_excluding_first() == 10.0);
}

TEST_CASE("absolute tolerance mode is used for hmkh") {
  auto prob = hmkh_problem({.reynolds = 100.0});
  const auto disc = make_discretization(prob, 4, 4, 1);
  PicardConfig cfg;
  cfg.max_picard = 1;
  const auto res = picard_solve(disc, initial_state(disc), 0.05, cfg);
  REQUIRE(res.stats.linear.size() == 1);
  CHECK(res.stats.linear[0].converged);
}
