#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "h2dft/mesh.hpp"
#include "h2dft/sparse.hpp"

namespace h2dft {

enum class PreconditionerKind { none, diagonal, multigrid };

const char* to_string(PreconditionerKind k);
PreconditionerKind preconditioner_from_string(const std::string& s);

struct SolverConfig {
  double rtol = 1e-8;
  int max_iterations = 10000;
  PreconditionerKind preconditioner = PreconditionerKind::multigrid;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0;  // recomputed as |b - Ax| / |b|
  bool converged = false;
  bool breakdown = false;
  std::string message;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// z = M^{-1} r
using PreconditionerFn = std::function<void(std::span<const double> r, std::span<double> z)>;

/// Preconditioned conjugate gradients. `x` holds the initial guess on entry.
/// Throws SolverError when a non-positive curvature p^T A p <= 0 shows up;
/// running out of iterations is reported through `converged = false` with the
/// best iterate left in `x`.
SolveReport cg_solve(const SparseOperator& A, std::span<const double> b, std::span<double> x,
                     const SolverConfig& cfg, const PreconditionerFn& M = {});

PreconditionerFn jacobi_preconditioner(const SparseOperator& A);

/// Nested P1 transfers taken from a mesh's refinement history.
///
/// Level k covers the first `level_vertex_counts[k]` vertices. New vertices
/// of a level are edge midpoints of the previous one, so prolongation is the
/// identity on old vertices and the average of the two parents elsewhere.
/// Vertices flagged in `fixed` (Dirichlet rows) are dropped from the transfers.
class MultigridHierarchy {
 public:
  MultigridHierarchy(const Mesh& mesh, std::span<const char> fixed, int max_levels = 25);

  int num_levels() const { return static_cast<int>(sizes_.size()); }
  int level_size(int k) const { return sizes_[k]; }
  /// Transfer from level k-1 to level k, k >= 1.
  const Prolongation& prolongation(int k) const { return transfers_[k - 1]; }
  std::span<const char> fixed() const { return fixed_; }

  /// Galerkin operators on every level (index 0 = coarsest, last = `fine`).
  /// Coarse rows of fixed vertices get a unit diagonal.
  std::vector<SparseOperator> galerkin_levels(const SparseOperator& fine) const;

 private:
  std::vector<int> sizes_;
  std::vector<Prolongation> transfers_;
  std::vector<char> fixed_;
};

enum class Smoother { symmetric_gauss_seidel, jacobi };

struct MultigridOptions {
  Smoother smoother = Smoother::symmetric_gauss_seidel;
  double jacobi_weight = 0.6;
  int pre_smooth = 1;
  int post_smooth = 1;
};

/// One V-cycle per application: symmetric smoothing (forward Gauss-Seidel
/// before the coarse correction, backward after), dense Cholesky on the
/// coarsest level. Symmetric and positive definite for SPD level operators.
class Multigrid {
 public:
  Multigrid(std::shared_ptr<const MultigridHierarchy> hierarchy, std::vector<SparseOperator> levels,
            MultigridOptions options = {});
  ~Multigrid();
  Multigrid(Multigrid&&) noexcept;
  Multigrid& operator=(Multigrid&&) noexcept;

  void apply(std::span<const double> r, std::span<double> z) const;
  PreconditionerFn as_preconditioner() const;
  int num_levels() const { return static_cast<int>(levels_.size()); }
  const SparseOperator& level(int k) const { return levels_[k]; }

 private:
  void cycle(int k, std::span<const double> b, std::span<double> x) const;
  void smooth(int k, std::span<const double> b, std::span<double> x, bool forward) const;

  struct Coarse;
  std::shared_ptr<const MultigridHierarchy> hierarchy_;
  std::vector<SparseOperator> levels_;
  std::vector<Vector> inv_diag_;
  MultigridOptions options_;
  std::unique_ptr<Coarse> coarse_;
  mutable std::vector<Vector> r_, b_, x_;
};

/// Operators T_k and S_k on every level that share one pattern per level, so
/// that T_k - eps S_k can be formed for any shift without a new Galerkin
/// product.
class ShiftedLevels {
 public:
  ShiftedLevels(std::shared_ptr<const MultigridHierarchy> hierarchy, const SparseOperator& T,
                const SparseOperator& S);
  /// Level operators of (T - shift S), constrained on fixed vertices.
  std::vector<SparseOperator> levels(double shift) const;
  Multigrid multigrid(double shift, MultigridOptions options = {}) const;
  const std::shared_ptr<const MultigridHierarchy>& hierarchy() const { return hierarchy_; }

 private:
  std::shared_ptr<const MultigridHierarchy> hierarchy_;
  std::vector<SparseOperator> T_, S_;
};

}  // namespace h2dft
