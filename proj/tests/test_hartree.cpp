#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "h2dft/hartree.hpp"

using namespace h2dft;

namespace {

struct Desk {
  std::shared_ptr<const Mesh> mesh;
  std::unique_ptr<FeSpace> space;
  SparseOperator T, S;

  static const Desk& get() {
    static const Desk d;
    return d;
  }

 private:
  Desk() {
    mesh = std::make_shared<const Mesh>(build_molecule_mesh(MeshConfig::for_molecule(1.0, 8, 2)));
    space = std::make_unique<FeSpace>(mesh);
    T = assemble_stiffness(*space);
    S = assemble_mass(*space);
  }
};

// Normalized Gaussian charge exp(-a|x-c|^2) (a/pi)^{3/2} and its potential erf(sqrt(a) r)/r.
double gaussian_density(const Vec3& x, double a, Vec3 c = {}) {
  return std::pow(a / std::numbers::pi, 1.5) * std::exp(-a * dot(x - c, x - c));
}
double gaussian_potential(const Vec3& x, double a, Vec3 c = {}) {
  const double r = norm(x - c);
  return r < 1e-12 ? 2 * std::sqrt(a / std::numbers::pi) : std::erf(std::sqrt(a) * r) / r;
}

double relative_l2(const SparseOperator& S, const Vector& a, const Vector& b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return std::sqrt(mass_inner(S, d, d) / mass_inner(S, b, b));
}

}  // namespace

TEST_CASE("radial oracle for the Gaussian potential") {
  // V(r) = (1/r) int_0^r rho 4 pi s^2 ds + int_r^inf rho 4 pi s ds
  const double a = 1.2;
  for (double r : {0.3, 1.0, 2.5}) {
    const int N = 40000;
    double inner = 0, outer = 0;
    for (int k = 0; k < N; ++k) {
      const double s = (k + 0.5) * r / N;
      inner += gaussian_density({s, 0, 0}, a) * 4 * std::numbers::pi * s * s * r / N;
      const double t = r + (k + 0.5) * 20.0 / N;
      outer += gaussian_density({t, 0, 0}, a) * 4 * std::numbers::pi * t * 20.0 / N;
    }
    CHECK(inner / r + outer == doctest::Approx(gaussian_potential({r, 0, 0}, a)).epsilon(1e-7));
  }
}

TEST_CASE("Poisson solve against a Gaussian charge") {
  const Desk& d = Desk::get();
  const Mesh& m = *d.mesh;
  const double a = 1.2;
  const auto rho = interpolate(m, [&](const Vec3& x) { return gaussian_density(x, a); });
  const auto exact = interpolate(m, [&](const Vec3& x) { return gaussian_potential(x, a); });

  for (HartreeBoundary bc : {HartreeBoundary::robin, HartreeBoundary::monopole, HartreeBoundary::dipole}) {
    HartreeConfig cfg;
    cfg.boundary = bc;
    const HartreeSolver solver(*d.space, d.T, d.S, cfg);
    const auto V = solver.solve(rho);
    const double err = relative_l2(d.S, V, exact);
    MESSAGE(std::string(to_string(bc)) << ": relative L2 error " << err << ", CG iterations " << solver.last_report().iterations);
    CHECK(err < 0.02);
    double vmin = 0;
    for (double v : V) vmin = std::min(vmin, v);
    CHECK(vmin >= -1e-8);
    // the 4 pi convention: Hartree self-energy of a unit Gaussian is sqrt(2a/pi)
    const double EH = 0.5 * mass_inner(d.S, rho, V);
    CHECK(EH == doctest::Approx(0.5 * std::sqrt(2 * a / std::numbers::pi)).epsilon(0.02));
  }
}

TEST_CASE("zero density, linearity and mirror equivariance") {
  const Desk& d = Desk::get();
  const Mesh& m = *d.mesh;
  const HartreeSolver robin(*d.space, d.T, d.S);
  const int n = d.space->size();

  const auto V0 = robin.solve(Vector(n, 0.0));
  CHECK(kernels::norm2(V0) == 0.0);

  const Vec3 c{1, 0, 0};
  const auto rho1 = interpolate(m, [&](const Vec3& x) { return gaussian_density(x, 2.0, c); });
  const auto rho2 = interpolate(m, [&](const Vec3& x) { return 0.5 * gaussian_density(x, 0.7, {0, 0.5, 0}); });
  Vector sum(n);
  for (int i = 0; i < n; ++i) sum[i] = rho1[i] + rho2[i];

  for (HartreeBoundary bc : {HartreeBoundary::robin, HartreeBoundary::dipole}) {
    HartreeConfig cfg;
    cfg.boundary = bc;
    cfg.solver.rtol = 1e-12;
    const HartreeSolver s(*d.space, d.T, d.S, cfg);
    const auto V1 = s.solve(rho1), V2 = s.solve(rho2), V12 = s.solve(sum);
    Vector lin(n);
    for (int i = 0; i < n; ++i) lin[i] = V1[i] + V2[i];
    CHECK(relative_l2(d.S, V12, lin) < 1e-9);
  }

  const auto perm = reflection_permutation(m);
  Vector mirrored(n);
  for (int i = 0; i < n; ++i) mirrored[i] = rho1[perm[i]];
  HartreeConfig tight;
  tight.solver.rtol = 1e-12;
  const HartreeSolver s(*d.space, d.T, d.S, tight);
  const auto Va = s.solve(rho1), Vb = s.solve(mirrored);
  Vector back(n);
  for (int i = 0; i < n; ++i) back[i] = Vb[perm[i]];
  CHECK(relative_l2(d.S, back, Va) < 1e-9);

  Vector negative(n, 0.0);
  negative[5] = -1.0;
  CHECK_THROWS_AS(s.solve(negative), std::invalid_argument);
}

TEST_CASE("boundary values") {
  MeshConfig cfg;
  cfg.initial_cells_per_axis = 4;
  const Mesh m = refine_uniform(build_box_mesh(cfg), 1);
  const auto bv = m.boundary_vertices();
  const int n = static_cast<int>(m.num_vertices());
  auto vertex_at = [&](const Vec3& p) {
    for (int i = 0; i < n; ++i) {
      if (m.vertices[i] == p) return i;
    }
    return -1;
  };

  SUBCASE("unit lump at the origin") {
    Vector q(n, 0.0);
    q[vertex_at({0, 0, 0})] = 1.0;
    const auto g = boundary_values(m, q, 0);
    for (std::size_t k = 0; k < bv.size(); ++k) CHECK(g[k] == 1.0 / norm(m.vertices[bv[k]]));
    const auto g1 = boundary_values(m, q, 1);
    for (std::size_t k = 0; k < bv.size(); ++k) CHECK(g1[k] == doctest::Approx(g[k]).epsilon(1e-15));
  }
  SUBCASE("two lumps against the direct sum") {
    const double R = 6.25;
    Vector q(n, 0.0);
    const Vec3 a{R, 0, 0}, b{-R, 0, 0};
    q[vertex_at(a)] = 1.0;
    q[vertex_at(b)] = 1.0;
    const double L = m.half_extent;
    const auto g = boundary_values(m, q, 0);
    for (std::size_t k = 0; k < bv.size(); ++k) {
      const Vec3& x = m.vertices[bv[k]];
      const double direct = 1 / norm(x - a) + 1 / norm(x - b);
      // equality holds on the axis through both lumps
      CHECK(std::abs(g[k] - direct) / direct <= R * R / (L * L) * (1 + 1e-12));
    }
  }
  SUBCASE("zero charge and bad centroid") {
    const auto g = boundary_values(m, Vector(n, 0.0), 0);
    for (double v : g) CHECK(v == 0.0);
    Vector q(n, 0.0);
    q[bv[0]] = 1.0;
    CHECK_THROWS_AS(boundary_values(m, q, 0), std::invalid_argument);
  }
  SUBCASE("charge summary") {
    Vector q(n, 0.0);
    q[vertex_at({12.5, 0, 0})] = 0.5;
    q[vertex_at({0, 0, 0})] = 1.5;
    const auto cs = charge_summary(m, q);
    CHECK(cs.Q == 2.0);
    CHECK(cs.centroid.x == doctest::Approx(12.5 * 0.25));
  }
}
