#include "mhdtrace/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mhdtrace::driver {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double half_pi = 0.5 * std::numbers::pi;
} // namespace

double TrigTerm::operator()(double x, double y, int dx, int dy) const {
  return c * std::pow(pi, dx + dy) * std::sin(pi * x + ax + dx * half_pi) *
         std::sin(pi * y + ay + dy * half_pi);
}

ProblemSpec mms_problem(const hdg::MhdParams &params, double u_scale, double b_scale) {
  params.validate();
  ProblemSpec p;
  p.name = "mms";
  p.params = params;
  // u = curl of sin(pi x) sin(pi y) / pi, b = curl of sin(pi x + .3) sin(pi y + .7) / pi.
  const TrigTerm ux{u_scale, 0.0, half_pi}, uy{-u_scale, half_pi, 0.0};
  const TrigTerm bx{b_scale, 0.3, 0.7 + half_pi}, by{-b_scale, 0.3 + half_pi, 0.7};
  const TrigTerm q{1.0, half_pi, 0.2};
  const double re = params.re, rm = params.rm, kap = params.kappa;

  auto u = [=](double x, double y) { return std::array<double, 2>{ux(x, y), uy(x, y)}; };
  auto b = [=](double x, double y) { return std::array<double, 2>{bx(x, y), by(x, y)}; };
  // curl b and its gradient.
  auto curl_b = [=](double x, double y, int dx, int dy) {
    return by(x, y, dx + 1, dy) - bx(x, y, dx, dy + 1);
  };

  hdg::ExactFields ex;
  ex.u = u;
  ex.b = b;
  ex.q = [=](double x, double y) { return q(x, y); };
  ex.r = [](double, double) { return 0.0; };
  ex.l = [=](double x, double y) {
    return std::array<double, 4>{ux(x, y, 1, 0) / re, ux(x, y, 0, 1) / re, uy(x, y, 1, 0) / re,
                                 uy(x, y, 0, 1) / re};
  };
  ex.j = [=](double x, double y) { return kap / rm * curl_b(x, y, 0, 0); };
  p.exact = ex;

  p.f = [=](double x, double y) {
    const double u0 = ux(x, y), u1 = uy(x, y);
    const double c = curl_b(x, y, 0, 0);
    const TrigTerm comp[2] = {ux, uy};
    std::array<double, 2> f{};
    for (int i = 0; i < 2; ++i) {
      const auto &ui = comp[i];
      const double conv = u0 * ui(x, y, 1, 0) + u1 * ui(x, y, 0, 1);
      const double lap = ui(x, y, 2, 0) + ui(x, y, 0, 2);
      f[i] = conv + q(x, y, i == 0 ? 1 : 0, i == 1 ? 1 : 0) - lap / re;
    }
    f[0] += kap * c * by(x, y);
    f[1] -= kap * c * bx(x, y);
    return f;
  };
  p.g = [=](double x, double y) {
    // a = u x b, grad a by the product rule.
    auto a_d = [&](int dx, int dy) {
      return ux(x, y, dx, dy) * by(x, y) + ux(x, y) * by(x, y, dx, dy) - uy(x, y, dx, dy) * bx(x, y) -
             uy(x, y) * bx(x, y, dx, dy);
    };
    const double ay = a_d(0, 1), ax_ = a_d(1, 0);
    return std::array<double, 2>{-kap * ay + kap / rm * curl_b(x, y, 0, 1),
                                 kap * ax_ - kap / rm * curl_b(x, y, 1, 0)};
  };
  p.u0 = u;
  p.b0 = b;
  for (auto &side : p.boundary.sides) {
    side.kind = hdg::BoundaryKind::dirichlet;
    side.velocity = u;
    side.magnetic = b;
  }
  return p;
}

std::array<double, 2> island_field(double x, double y, double epsilon) {
  const double den = std::cosh(2.0 * pi * y) + epsilon * std::cos(2.0 * pi * x);
  return {std::sinh(2.0 * pi * y) / den, epsilon * std::sin(2.0 * pi * x) / den};
}

double island_current(double x, double y, const IslandOptions &opt, double rm) {
  const double den = std::cosh(2.0 * pi * y) + opt.epsilon * std::cos(2.0 * pi * x);
  return -2.0 * pi * opt.kappa * (1.0 - opt.epsilon * opt.epsilon) / (rm * den * den);
}

std::array<double, 2> island_perturbation(double x, double y, double sigma) {
  return {sigma * half_pi * std::cos(pi * x) * std::sin(0.5 * pi * y),
          -sigma * pi * std::sin(pi * x) * std::cos(0.5 * pi * y)};
}

ProblemSpec island_problem(const IslandOptions &opt) {
  if (!(opt.lundquist > 0.0)) throw std::invalid_argument("island_problem: S must be positive");
  ProblemSpec p;
  p.name = "island";
  p.bounds = {-1.0, 1.0, -1.0, 1.0};
  p.periodic_x = true;
  p.params.re = opt.lundquist;
  p.params.rm = opt.lundquist;
  p.params.kappa = opt.kappa;
  p.params.validate();
  const double eps = opt.epsilon, sigma = opt.sigma, rm = p.params.rm;
  const double amp = -2.0 * pi * opt.kappa * (1.0 - eps * eps) / rm;
  p.b0 = [=](double x, double y) {
    auto b = island_field(x, y, eps);
    const auto db = island_perturbation(x, y, sigma);
    return std::array<double, 2>{b[0] + db[0], b[1] + db[1]};
  };
  p.f = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
  // g = curl J0 = (dJ0/dy, -dJ0/dx) with J0 = amp / D^2.
  p.g = [=](double x, double y) {
    const double den = std::cosh(2.0 * pi * y) + eps * std::cos(2.0 * pi * x);
    const double dy = 2.0 * pi * std::sinh(2.0 * pi * y);
    const double dx = -2.0 * pi * eps * std::sin(2.0 * pi * x);
    const double f = -2.0 * amp / (den * den * den);
    return std::array<double, 2>{f * dy, -f * dx};
  };
  p.boundary.sides[1].kind = hdg::BoundaryKind::periodic;
  p.boundary.sides[3].kind = hdg::BoundaryKind::periodic;
  p.boundary.sides[0].kind = hdg::BoundaryKind::mirror_conductor;
  p.boundary.sides[2].kind = hdg::BoundaryKind::mirror_conductor;
  return p;
}

ProblemSpec hmkh_problem(const HmkhOptions &opt) {
  ProblemSpec p;
  p.name = "hmkh";
  p.bounds = {0.0, 4.0, -2.0, 2.0};
  p.periodic_x = true;
  p.params.re = opt.reynolds;
  p.params.rm = opt.reynolds;
  p.params.kappa = opt.kappa;
  p.params.validate();
  const double b0 = opt.b0, delta = opt.delta;
  p.u0 = [](double, double y) { return std::array<double, 2>{y >= 0.0 ? 1.0 : -1.0, 0.0}; };
  p.b0 = [=](double, double y) { return std::array<double, 2>{b0 * std::tanh(y / delta), 0.0}; };
  p.f = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
  p.g = p.f;
  p.boundary.sides[1].kind = hdg::BoundaryKind::periodic;
  p.boundary.sides[3].kind = hdg::BoundaryKind::periodic;
  for (int s : {0, 2}) {
    auto &side = p.boundary.sides[s];
    side.kind = hdg::BoundaryKind::mirror_conductor;
    side.fix_tangential_b = true;
    side.magnetic = p.b0;
  }
  p.tolerance_mode = ToleranceMode::absolute;
  return p;
}

ProblemSpec cavity_problem(const CavityOptions &opt) {
  ProblemSpec p;
  p.name = "cavity";
  p.bounds = {-0.5, 0.5, -0.5, 0.5};
  p.params.re = opt.reynolds;
  p.params.rm = opt.reynolds;
  p.params.kappa = opt.kappa;
  p.params.validate();
  p.f = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
  p.g = p.f;
  // The lid value wins at the two top corners.
  auto wall_velocity = [](double, double y) {
    return std::array<double, 2>{y >= 0.5 - 1e-12 ? 1.0 : 0.0, 0.0};
  };
  for (auto &side : p.boundary.sides) {
    side.kind = hdg::BoundaryKind::dirichlet;
    side.velocity = wall_velocity;
    side.magnetic = [](double, double) { return std::array<double, 2>{-1.0, 0.0}; };
  }
  return p;
}

} // namespace mhdtrace::driver
