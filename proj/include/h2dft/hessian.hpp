#pragma once

#include <string>
#include <utility>
#include <vector>

#include "h2dft/scf.hpp"

namespace h2dft {

/// `full` is the complete second variation of the Lagrangian. `appendix`
/// keeps only the opposite-spin Hartree potential on the diagonal blocks and
/// only the cross-spin exchange of Hartree responses, for comparison.
enum class HessianVariant { full, appendix };

const char* to_string(HessianVariant v);
HessianVariant hessian_variant_from_string(const std::string& s);

struct HessianConfig {
  HessianVariant variant = HessianVariant::full;
  SolverConfig poisson{1e-10, 10000, PreconditionerKind::multigrid};
  /// States whose Euler-Lagrange residual exceeds this are rejected.
  double max_state_residual = 1e-4;
  int max_iterations = 300;
  /// Extra block vectors carried along to speed up convergence of the k wanted ones.
  int guard_vectors = 2;
  unsigned seed = 1;
  /// Print Ritz values and residuals per iteration to stderr.
  bool trace = false;

  void validate() const;
};

enum class StationaryKind { local_min, saddle, inconclusive };

struct HessianReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // |P H P w - lambda S w| / |w|_S, lumped dual norm
  int n_negative = 0;
  StationaryKind kind = StationaryKind::inconclusive;
  bool converged = false;
  int iterations = 0;
  double tol_eig = 0;
  /// Eigenvectors as concatenated (w_plus, w_minus), S-orthonormal.
  std::vector<Vector> eigenvectors;

  /// "local_min", "saddle(n)" or "inconclusive".
  std::string classification() const;
};

/// Classification from sorted eigenvalues: local minimum iff the smallest one
/// exceeds +tol, saddle(n) iff exactly n lie below -tol with none inside
/// [-tol, tol] and at least one computed eigenvalue above +tol.
StationaryKind classify(const std::vector<double>& eigenvalues, double tol, bool converged, int* n_negative = nullptr);

/// Second variation at a fixed state, halved so that <w, H w> equals one half
/// of the second derivative of the Lagrangian along w.
///
/// r_s = [T + M_{v_nuc + V} - (20/9) alpha l |c_s|^{2/3} - eps_s S] w_s + 2 b(c_s, U),
/// U = Hartree potential of the load sum_t b(c_t, w_t).
/// Vectors are concatenated (plus, minus), each of the model's size; boundary
/// entries of inputs are ignored and those of outputs are zero.
class HessianOperator {
 public:
  HessianOperator(const Model& model, const OrbitalState& state, HessianConfig cfg = {});

  int size() const { return 2 * n_; }
  void apply(std::span<const double> w, std::span<double> r) const;
  Vector apply(std::span<const double> w) const;

  /// w_s <- w_s - (c_s^T S w_s) c_s for both spins.
  void project_tangent(std::span<double> w) const;
  double s_inner(std::span<const double> u, std::span<const double> v) const;
  void apply_mass(std::span<const double> w, std::span<double> out) const;
  /// z = P K^{-1} P^T r with K = T - eps_s S per spin (one V-cycle each).
  void precondition(std::span<const double> r, std::span<double> z) const;
  /// Lumped dual norm of the tangent part of a residual: r_s - S c_s (c_s^T r_s).
  double residual_norm(std::span<const double> r) const;

  const Model& model() const { return model_; }
  const OrbitalState& state() const { return state_; }
  int poisson_solves() const { return solves_; }

 private:
  const Model& model_;
  OrbitalState state_;
  HessianConfig cfg_;
  int n_;
  SparseOperator diag_[2];
  std::vector<Multigrid> precond_;
  Vector Sc_[2];
  mutable int solves_ = 0;
};

/// Both halves of the Hessian action as separate fields.
std::pair<Vector, Vector> hessian_apply(const Model& model, const OrbitalState& state, std::span<const double> w_plus,
                                        std::span<const double> w_minus, const HessianConfig& cfg = {});

/// Tangent projection of (w_plus, w_minus) given as one concatenated vector.
Vector project_tangent(const Model& model, const OrbitalState& state, std::span<const double> w);

/// k smallest eigenvalues of P H P on the tangent space (H w = lambda S w),
/// by block preconditioned conjugate gradients (LOBPCG) with S-inner
/// products and Rayleigh-Ritz on the full block each step.
HessianReport smallest_eigenpairs(const Model& model, const OrbitalState& state, int k = 6, double tol_eig = 1e-4,
                                  const HessianConfig& cfg = {});
HessianReport smallest_eigenpairs(const HessianOperator& H, int k, double tol_eig, const HessianConfig& cfg);

}  // namespace h2dft
