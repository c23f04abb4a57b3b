#include "h2dft/hartree.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace h2dft {

const char* to_string(HartreeBoundary b) {
  switch (b) {
    case HartreeBoundary::robin: return "robin";
    case HartreeBoundary::monopole: return "monopole";
    case HartreeBoundary::dipole: return "dipole";
  }
  return "?";
}

HartreeBoundary hartree_boundary_from_string(const std::string& s) {
  if (s == "robin") return HartreeBoundary::robin;
  if (s == "monopole") return HartreeBoundary::monopole;
  if (s == "dipole") return HartreeBoundary::dipole;
  throw std::invalid_argument("unknown Hartree boundary '" + s + "'");
}

ChargeSummary charge_summary(const Mesh& mesh, std::span<const double> q) {
  ChargeSummary c;
  Vec3 m;
  for (std::size_t i = 0; i < q.size(); ++i) {
    c.Q += q[i];
    m = m + mesh.vertices[i] * q[i];
  }
  if (c.Q != 0) c.centroid = m * (1.0 / c.Q);
  return c;
}

std::vector<double> boundary_values(const Mesh& mesh, std::span<const double> q, int order) {
  if (order != 0 && order != 1) throw std::invalid_argument("boundary_values: order must be 0 or 1");
  const auto bv = mesh.boundary_vertices();
  std::vector<double> g(bv.size(), 0.0);
  const ChargeSummary cs = charge_summary(mesh, q);
  if (cs.Q == 0) return g;
  if (order == 0) {
    const double L = mesh.half_extent;
    const Vec3& c = cs.centroid;
    if (!(std::abs(c.x) < L && std::abs(c.y) < L && std::abs(c.z) < L)) {
      throw std::invalid_argument("boundary_values: charge centroid is not inside the domain");
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(bv.size()); ++k) {
      g[k] = cs.Q / norm(mesh.vertices[bv[k]] - c);
    }
    return g;
  }
  Vec3 p;
  for (std::size_t i = 0; i < q.size(); ++i) p = p + mesh.vertices[i] * q[i];
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(bv.size()); ++k) {
    const Vec3& x = mesh.vertices[bv[k]];
    const double r = norm(x);
    g[k] = cs.Q / r + dot(p, x) / (r * r * r);
  }
  return g;
}

HartreeSolver::HartreeSolver(const FeSpace& space, const SparseOperator& T, const SparseOperator& S,
                             HartreeConfig cfg)
    : space_(space), S_(S), cfg_(cfg) {
  cfg_.solver.validate();
  K_ = T.combine(2.0, T, 0.0);
  std::vector<char> fixed(space.size(), 0);
  if (cfg_.boundary == HartreeBoundary::robin) {
    A_ = K_.combine(1.0, assemble_farfield_boundary(space), 1.0);
  } else {
    fixed.assign(space.boundary_mask().begin(), space.boundary_mask().end());
    A_ = K_.constrained(fixed);
  }
  switch (cfg_.solver.preconditioner) {
    case PreconditionerKind::none: break;
    case PreconditionerKind::diagonal: precond_ = jacobi_preconditioner(A_); break;
    case PreconditionerKind::multigrid: {
      auto h = std::make_shared<const MultigridHierarchy>(space.mesh(), fixed);
      mg_ = std::make_unique<Multigrid>(h, h->galerkin_levels(A_));
      precond_ = mg_->as_preconditioner();
      break;
    }
  }
}

HartreeSolver::~HartreeSolver() = default;

NodalField HartreeSolver::solve(std::span<const double> rho, std::span<const double> guess) const {
  for (double v : rho) {
    if (!(v >= -1e-12)) throw std::invalid_argument("hartree: density must be non-negative and finite");
  }
  return solve_load(S_.apply(rho), guess);
}

NodalField HartreeSolver::solve_load(std::span<const double> load, std::span<const double> guess) const {
  return solve_load(load, cfg_.solver, guess);
}

NodalField HartreeSolver::solve_load(std::span<const double> load, const SolverConfig& solver,
                                     std::span<const double> guess) const {
  const int n = space_.size();
  if (static_cast<int>(load.size()) != n) throw std::invalid_argument("hartree: load size mismatch");
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = 4 * std::numbers::pi * load[i];
  NodalField V(n, 0.0);
  if (!guess.empty()) std::copy(guess.begin(), guess.end(), V.begin());

  if (cfg_.boundary != HartreeBoundary::robin) {
    const Mesh& m = space_.mesh();
    const auto bv = m.boundary_vertices();
    const auto g = boundary_values(m, load, cfg_.boundary == HartreeBoundary::monopole ? 0 : 1);
    // move the known boundary values to the right-hand side
    Vector full(n, 0.0);
    for (std::size_t k = 0; k < bv.size(); ++k) full[bv[k]] = g[k];
    const Vector Kg = K_.apply(full);
    const auto fixed = space_.boundary_mask();
    for (int i = 0; i < n; ++i) b[i] = fixed[i] ? full[i] : b[i] - Kg[i];
    for (std::size_t k = 0; k < bv.size(); ++k) V[bv[k]] = g[k];
  }
  last_ = cg_solve(A_, b, V, solver, precond_);
  if (!last_.converged) {
    std::ostringstream msg;
    msg << "hartree: Poisson solve did not converge (" << last_.iterations << " iterations, residual "
        << last_.relative_residual << ")";
    throw SolverError(msg.str(), last_);
  }
  return V;
}

NodalField solve_hartree(const FeSpace& space, std::span<const double> rho, const HartreeConfig& cfg) {
  const auto T = assemble_stiffness(space);
  const auto S = assemble_mass(space);
  return HartreeSolver(space, T, S, cfg).solve(rho);
}

}  // namespace h2dft
