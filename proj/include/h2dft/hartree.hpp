#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "h2dft/linsolve.hpp"
#include "h2dft/operators.hpp"

namespace h2dft {

/// How the free-space condition is imposed on the cube surface.
///  - robin: dV/dn = -(x.n / |x|^2) V, exact for a point charge at the origin
///    and linear in the density.
///  - monopole: Dirichlet data Q / |x_b - centroid|.
///  - dipole: Dirichlet data from the monopole and dipole moments about the
///    origin, linear in the density.
enum class HartreeBoundary { robin, monopole, dipole };

const char* to_string(HartreeBoundary b);
HartreeBoundary hartree_boundary_from_string(const std::string& s);

struct HartreeConfig {
  HartreeBoundary boundary = HartreeBoundary::robin;
  SolverConfig solver{1e-10, 10000, PreconditionerKind::multigrid};
};

struct ChargeSummary {
  double Q = 0;
  Vec3 centroid;
};

/// Q = integral rho and its centroid, both from the lumped charges q = S rho.
ChargeSummary charge_summary(const Mesh& mesh, std::span<const double> charges);

/// Dirichlet data at `mesh.boundary_vertices()` from lumped vertex charges.
/// order 0: Q / |x_b - centroid|. order 1: monopole plus dipole about the
/// origin, Q/|x_b| + p.x_b/|x_b|^3.
std::vector<double> boundary_values(const Mesh& mesh, std::span<const double> charges, int order);

/// Solves -Laplace V = 4 pi rho. The right-hand side is given either as a
/// nodal density (load 4 pi S rho) or directly as a load vector
/// r_m = integral eta_m rho.
class HartreeSolver {
 public:
  HartreeSolver(const FeSpace& space, const SparseOperator& T, const SparseOperator& S, HartreeConfig cfg = {});
  ~HartreeSolver();

  NodalField solve(std::span<const double> rho, std::span<const double> guess = {}) const;
  NodalField solve_load(std::span<const double> load, std::span<const double> guess = {}) const;
  NodalField solve_load(std::span<const double> load, const SolverConfig& solver,
                        std::span<const double> guess = {}) const;

  const HartreeConfig& config() const { return cfg_; }
  const SolveReport& last_report() const { return last_; }
  /// System operator (Laplacian stiffness plus the Robin term, or the
  /// constrained stiffness for Dirichlet data).
  const SparseOperator& system() const { return A_; }

 private:
  const FeSpace& space_;
  const SparseOperator& S_;
  HartreeConfig cfg_;
  SparseOperator K_;  // unconstrained Laplacian stiffness
  SparseOperator A_;
  std::unique_ptr<Multigrid> mg_;
  PreconditionerFn precond_;
  mutable SolveReport last_;
};

/// One-shot convenience wrapper.
NodalField solve_hartree(const FeSpace& space, std::span<const double> rho, const HartreeConfig& cfg = {});

}  // namespace h2dft
