#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "h2dft/scf.hpp"

namespace h2dft {

/// Mass 4 pi int u^2 r^2 dr of the positive radial solution of the normalized
/// equation -1/2 Lap u - u^{5/3} + u = 0. Pinned from the shooting solver
/// (step 1e-3, r_max 20); solve_normalized_profile reproduces it to 1e-6.
inline constexpr double kNormalizedMass = 113.30524640264967;
/// Central value u(0) of the same solution.
inline constexpr double kNormalizedCenter = 4.236411484901419;

struct RadialGridConfig {
  double r_max = 20.0;
  double step = 1e-3;
  double bracket_lo = 1.5;   // u(0) below the solution: profile turns up
  double bracket_hi = 10.0;  // u(0) above the solution: profile crosses zero
  double bisection_tol = 1e-16;  // relative; bisection also stops when the bracket cannot shrink
  /// Below this value the integrated profile is continued by its exact linear
  /// asymptote A exp(-sqrt(2E) r) / r, before round-off in the shooting
  /// parameter makes the growing mode visible.
  double tail_threshold = 1e-6;

  void validate() const;
};

/// phi(r) on a uniform radial grid with phi'(r). `E` is the eigenvalue of
/// -1/2 Lap phi - k |phi|^{2/3} phi + E phi = 0, where k = 1 for the
/// normalized form and k = 4/3 after rescaling to mass one.
struct RadialProfile {
  std::vector<double> r, phi, dphi;
  double E = 0;
  double nonlinearity = 1.0;  // k
  double mass = 0;            // 4 pi int phi^2 r^2 dr
  double center_value = 0;    // phi(0)

  /// Cubic Hermite interpolation; zero beyond the grid.
  double operator()(double radius) const;
  double derivative(double radius) const;
};

class SolitonError : public std::runtime_error {
 public:
  SolitonError(const std::string& what, std::vector<std::pair<double, double>> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  /// Bracket (lo, hi) after every bisection step.
  const std::vector<std::pair<double, double>>& history() const { return history_; }

 private:
  std::vector<std::pair<double, double>> history_;
};

/// Shooting on u'' = -2u'/r + 2(u - u^{5/3}), u'(0) = 0, with bisection on u(0).
RadialProfile solve_normalized_profile(const RadialGridConfig& cfg = {});

/// phi(r) = beta u(gamma r) with gamma^3 = 64 / (27 M), beta = (3/4)^{3/2} gamma^3:
/// the mass-one solution of -1/2 Lap phi - (4/3) phi^{5/3} + E phi = 0, E = gamma^2.
RadialProfile rescale_to_mass_one(const RadialProfile& normalized);

/// Max over interior grid points of |phi'' + 2 phi'/r - 2(E phi - k phi^{5/3})|,
/// with phi'' from a fourth-order difference of phi'.
double ode_residual(const RadialProfile& p);

/// 4 pi int |phi'|^2 r^2 dr and 4 pi int phi^{8/3} r^2 dr (composite Simpson).
double gradient_integral(const RadialProfile& p);
double nonlinear_integral(const RadialProfile& p);
/// F(phi) = 1/2 int |grad phi|^2 - int |phi|^{8/3}.
double F_energy(const RadialProfile& p);

void write_profile_csv(std::ostream& os, const RadialProfile& p);

/// Large-alpha comparison of a converged state with the mass-one profile.
struct RescaleReport {
  double alpha = 0;
  Vec3 x_plus, x_minus;            // density centroids
  double center_error_plus = 0;    // distance of x_+ to the nearest nucleus
  double center_error_minus = 0;
  double h1_plus = 0, h1_minus = 0;  // |psi~ - phi|_{H^1}
  double energy_ratio = 0;         // E_total / alpha^2 (no nuclear repulsion)
  double reference_ratio = 0;      // 2 F(phi)
};

/// psi~(y) = alpha^{-3/2} psi(y / alpha + x_s) compared with phi in H^1. The
/// norm is evaluated on the finite element mesh through the equivalent
/// |psi - Phi|^2 + alpha^{-2} |grad(psi - Phi)|^2, Phi(x) = alpha^{3/2} phi(alpha |x - x_s|).
RescaleReport compare_rescaled(const Model& model, const OrbitalState& state, const RadialProfile& mass_one);

}  // namespace h2dft
