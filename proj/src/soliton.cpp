#include "h2dft/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace h2dft {

void RadialGridConfig::validate() const {
  if (!(r_max >= 20)) throw std::invalid_argument("soliton: r_max must be >= 20");
  if (!(step > 0 && step <= 1e-3)) throw std::invalid_argument("soliton: step must lie in (0, 1e-3]");
  if (!(bracket_lo > 1 && bracket_hi > bracket_lo)) throw std::invalid_argument("soliton: invalid bracket");
  if (!(bisection_tol > 0)) throw std::invalid_argument("soliton: bisection_tol must be positive");
  if (!(tail_threshold > 0 && tail_threshold < 1e-3)) throw std::invalid_argument("soliton: tail_threshold out of range");
}

namespace {

// Normalized radial equation as a first-order system y = (u, u').
struct Rhs {
  double operator()(double r, double u, double du) const {
    const double up = std::max(u, 0.0);
    return -2 * du / r + 2 * (u - std::pow(up, 5.0 / 3.0));
  }
};

enum class Outcome { crosses_zero, turns_up, decays };

struct Shot {
  Outcome outcome;
  std::vector<double> u, du;  // up to the decision point
};

// RK4 from a series start at r = h: u = u0 + c r^2, c = (u0 - u0^{5/3}) / 3.
Shot shoot(double u0, const RadialGridConfig& cfg, bool record) {
  const double h = cfg.step;
  const int n = static_cast<int>(std::lround(cfg.r_max / h));
  const double c2 = (u0 - std::pow(u0, 5.0 / 3.0)) / 3.0;
  const double c4 = c2 * (1 - (5.0 / 3.0) * std::pow(u0, 2.0 / 3.0)) / 10.0;
  Shot s{Outcome::decays, {}, {}};
  if (record) {
    s.u.reserve(n + 1);
    s.du.reserve(n + 1);
    s.u.push_back(u0);
    s.du.push_back(0.0);
  }
  double u = u0 + c2 * h * h + c4 * h * h * h * h;
  double du = 2 * c2 * h + 4 * c4 * h * h * h;
  if (record) {
    s.u.push_back(u);
    s.du.push_back(du);
  }
  const Rhs f;
  for (int i = 1; i < n; ++i) {
    // the 1/r coefficient makes RK4 inaccurate next to the origin, and truncation
    // error elsewhere feeds the growing mode; substep both
    const int sub = i * h < 0.05 ? 64 : 4;
    const double hs = h / sub;
    for (int j = 0; j < sub; ++j) {
      const double r = i * h + j * hs;
      const double k1u = du, k1v = f(r, u, du);
      const double k2u = du + 0.5 * hs * k1v, k2v = f(r + 0.5 * hs, u + 0.5 * hs * k1u, du + 0.5 * hs * k1v);
      const double k3u = du + 0.5 * hs * k2v, k3v = f(r + 0.5 * hs, u + 0.5 * hs * k2u, du + 0.5 * hs * k2v);
      const double k4u = du + hs * k3v, k4v = f(r + hs, u + hs * k3u, du + hs * k3v);
      u += hs / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      du += hs / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    if (u <= 0) {
      s.outcome = Outcome::crosses_zero;
      return s;
    }
    if (du >= 0) {
      s.outcome = Outcome::turns_up;
      return s;
    }
    if (record) {
      s.u.push_back(u);
      s.du.push_back(du);
    }
  }
  return s;
}

double simpson(const std::vector<double>& r, const std::vector<double>& g) {
  const std::size_t n = r.size();
  const double h = r[1] - r[0];
  std::size_t m = (n - 1) % 2 == 0 ? n - 1 : n - 2;  // even number of intervals
  double s = g[0] + g[m];
  for (std::size_t i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * g[i];
  s *= h / 3;
  if (m < n - 1) s += 0.5 * h * (g[n - 2] + g[n - 1]);
  return s;
}

}  // namespace

RadialProfile solve_normalized_profile(const RadialGridConfig& cfg) {
  cfg.validate();
  double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
  std::vector<std::pair<double, double>> history{{lo, hi}};
  if (shoot(lo, cfg, false).outcome != Outcome::turns_up || shoot(hi, cfg, false).outcome != Outcome::crosses_zero)
    throw SolitonError("soliton: bracket does not enclose the positive solution", history);
  while (hi - lo > cfg.bisection_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Outcome o = shoot(mid, cfg, false).outcome;
    if (o == Outcome::crosses_zero)
      hi = mid;
    else
      lo = mid;
    history.emplace_back(lo, hi);
    if (history.size() > 200) throw SolitonError("soliton: bisection did not converge", history);
  }
  const double u0 = 0.5 * (lo + hi);
  // the lower end never crosses zero, so its trajectory is the positive branch
  Shot s = shoot(lo, cfg, true);

  RadialProfile p;
  p.E = 1.0;
  p.nonlinearity = 1.0;
  p.center_value = u0;
  const double h = cfg.step;
  const int n = static_cast<int>(std::lround(cfg.r_max / h));
  const double kappa = std::sqrt(2 * p.E);
  // continue by the linear asymptote once the profile is small
  std::size_t match = 0;
  for (std::size_t i = 1; i < s.u.size(); ++i)
    if (s.u[i] < cfg.tail_threshold) {
      match = i;
      break;
    }
  if (match == 0) throw SolitonError("soliton: profile did not reach the tail threshold before leaving the grid", history);
  const double rm = match * h;
  // match the slope: a kink would show up in phi'' while a tiny jump in phi does not
  const double A = -s.du[match] * rm * std::exp(kappa * rm) / (kappa + 1 / rm);
  p.r.resize(n + 1);
  p.phi.resize(n + 1);
  p.dphi.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double r = i * h;
    p.r[i] = r;
    if (static_cast<std::size_t>(i) < match) {
      p.phi[i] = s.u[i];
      p.dphi[i] = s.du[i];
    } else {
      const double e = A * std::exp(-kappa * r) / r;
      p.phi[i] = e;
      p.dphi[i] = -e * (kappa + 1 / r);
    }
  }
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = p.phi[i] * p.phi[i] * p.r[i] * p.r[i];
  p.mass = 4 * M_PI * simpson(p.r, g);
  return p;
}

RadialProfile rescale_to_mass_one(const RadialProfile& u) {
  if (u.r.size() < 3 || !(u.mass > 0)) throw std::invalid_argument("rescale: invalid profile");
  // general form: phi = beta u(gamma r) solves -1/2 Lap - (4/3) phi^{5/3} + E phi = 0 with
  // E = gamma^2 E_u and (4/3) beta^{2/3} = gamma^2 k_u
  const double g3 = 64.0 / 27.0 * std::pow(u.nonlinearity, 1.5) / u.mass;
  const double gamma = std::cbrt(g3);
  const double beta = std::pow(0.75 * u.nonlinearity, 1.5) * g3;
  RadialProfile p;
  p.nonlinearity = 4.0 / 3.0;
  p.E = gamma * gamma * u.E;
  p.center_value = beta * u.center_value;
  p.r.resize(u.r.size());
  p.phi.resize(u.r.size());
  p.dphi.resize(u.r.size());
  for (std::size_t i = 0; i < u.r.size(); ++i) {
    p.r[i] = u.r[i] / gamma;
    p.phi[i] = beta * u.phi[i];
    p.dphi[i] = beta * gamma * u.dphi[i];
  }
  p.mass = beta * beta / g3 * u.mass;
  return p;
}

double RadialProfile::operator()(double radius) const {
  if (radius < 0) radius = -radius;
  const double h = r[1] - r[0];
  const double x = radius / h;
  const std::size_t i = static_cast<std::size_t>(x);
  if (i + 1 >= r.size()) return 0.0;
  const double t = x - i;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * phi[i] + h10 * h * dphi[i] + h01 * phi[i + 1] + h11 * h * dphi[i + 1];
}

double RadialProfile::derivative(double radius) const {
  const double sgn = radius < 0 ? -1.0 : 1.0;
  radius = std::abs(radius);
  const double h = r[1] - r[0];
  const double x = radius / h;
  const std::size_t i = static_cast<std::size_t>(x);
  if (i + 1 >= r.size()) return 0.0;
  const double t = x - i;
  const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1, d01 = -d00, d11 = 3 * t * t - 2 * t;
  return sgn * (d00 * phi[i] / h + d10 * dphi[i] + d01 * phi[i + 1] / h + d11 * dphi[i + 1]);
}

double ode_residual(const RadialProfile& p) {
  const std::size_t n = p.r.size();
  const double h = p.r[1] - p.r[0];
  double worst = 0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d2 = (p.dphi[i - 2] - 8 * p.dphi[i - 1] + 8 * p.dphi[i + 1] - p.dphi[i + 2]) / (12 * h);
    const double res = d2 + 2 * p.dphi[i] / p.r[i] - 2 * (p.E * p.phi[i] - p.nonlinearity * std::pow(p.phi[i], 5.0 / 3.0));
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

double gradient_integral(const RadialProfile& p) {
  std::vector<double> g(p.r.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = p.dphi[i] * p.dphi[i] * p.r[i] * p.r[i];
  return 4 * M_PI * simpson(p.r, g);
}

double nonlinear_integral(const RadialProfile& p) {
  std::vector<double> g(p.r.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(p.phi[i], 8.0 / 3.0) * p.r[i] * p.r[i];
  return 4 * M_PI * simpson(p.r, g);
}

double F_energy(const RadialProfile& p) { return 0.5 * gradient_integral(p) - nonlinear_integral(p); }

void write_profile_csv(std::ostream& os, const RadialProfile& p) {
  os << "r,phi\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.r.size(); ++i) os << p.r[i] << ',' << p.phi[i] << '\n';
}

RescaleReport compare_rescaled(const Model& model, const OrbitalState& state, const RadialProfile& phi) {
  if (!(state.alpha > 0)) throw std::invalid_argument("compare_rescaled: alpha must be positive");
  const Mesh& mesh = model.mesh();
  const double L = mesh.half_extent;
  RescaleReport rep;
  rep.alpha = state.alpha;
  rep.reference_ratio = 2 * F_energy(phi);
  rep.energy_ratio = total_energy(model, state).total() / (state.alpha * state.alpha);
  const double a = state.alpha;
  const double R = model.nuclei().R;
  for (int spin = 0; spin < 2; ++spin) {
    const auto& c = state.c(spin);
    const Vec3 x = orbital_centroid(model, c);
    if (std::abs(x.x) >= L || std::abs(x.y) >= L || std::abs(x.z) >= L)
      throw std::invalid_argument("compare_rescaled: density centroid outside the domain");
    const double err = std::min(norm(x - Vec3{R, 0, 0}), norm(x - Vec3{-R, 0, 0}));
    const NodalField Phi = interpolate(mesh, [&](const Vec3& y) { return std::pow(a, 1.5) * phi(a * norm(y - x)); });
    // orbitals are defined up to sign
    const double sgn = mass_inner(model.S(), c, Phi) < 0 ? -1.0 : 1.0;
    Vector d(c.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = model.fixed()[i] ? 0.0 : sgn * c[i] - Phi[i];
    const double l2 = mass_inner(model.S(), d, d);
    const double grad = 2 * mass_inner(model.T(), d, d);
    const double h1 = std::sqrt(l2 + grad / (a * a));
    if (spin == 0) {
      rep.x_plus = x;
      rep.center_error_plus = err;
      rep.h1_plus = h1;
    } else {
      rep.x_minus = x;
      rep.center_error_minus = err;
      rep.h1_minus = h1;
    }
  }
  return rep;
}

}  // namespace h2dft
