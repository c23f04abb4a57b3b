#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "h2dft/mesh.hpp"
#include "h2dft/sparse.hpp"

namespace h2dft {

/// Scalar field given by its values at mesh vertices (P1 coefficients).
using NodalField = std::vector<double>;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nuclear charges at +-R e1, with 1/r softened to 1/(r + delta). With
/// `single_center` a single unit charge sits at the origin instead (the
/// hydrogen atom check).
struct NuclearPotentialSpec {
  double R = 1.0;
  double delta = 1e-2;
  bool single_center = false;

  void validate() const {
    if (!(R > 0)) throw std::invalid_argument("nuclear potential: R must be positive");
    if (!(delta > 0)) throw std::invalid_argument("nuclear potential: delta must be positive");
  }
};

/// Default softening: half the smallest cell diameter at the nuclei, clamped to [1e-4, 1e-2].
double default_nuclear_delta(const Mesh& mesh, double R);

/// P1 finite element space on a mesh.
///
/// Owns the cell geometry (volumes and barycentric gradients), the shared
/// sparsity pattern, and the vertex-to-cell adjacency used to evaluate load
/// vectors without scattering. All assembly goes through a per-entry gather of
/// cell contributions in ascending cell order, so the parallel and serial
/// paths produce identical bits.
class FeSpace {
 public:
  explicit FeSpace(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int size() const { return static_cast<int>(mesh_->num_vertices()); }
  const std::shared_ptr<const SparsityPattern>& pattern() const { return pattern_; }
  std::span<const char> boundary_mask() const { return mesh_->on_boundary; }

  double cell_volume(std::size_t c) const { return volume_[c]; }
  const std::array<Vec3, 4>& cell_gradients(std::size_t c) const { return grad_[c]; }

  /// Lumped mass l = S 1 (cached).
  const Vector& lumped_mass() const { return lumped_; }

  /// b_m = integral of eta_m * u_h * v_h, exact for P1 u, v.
  Vector product_load(std::span<const double> u, std::span<const double> v) const;
  /// Same quantity computed by a serial scatter over cells; test reference.
  Vector product_load_reference(std::span<const double> u, std::span<const double> v) const;

  struct Contribution {
    int cell;
    unsigned char a, b;  // local vertex indices
  };
  /// For every stored entry, the cell contributions to it in ascending cell order.
  const std::vector<int>& contribution_ptr() const { return contrib_ptr_; }
  const std::vector<Contribution>& contributions() const { return contrib_; }

  /// Cells around each vertex: (cell, local index) pairs, ascending cell order.
  const std::vector<int>& vertex_cell_ptr() const { return vc_ptr_; }
  const std::vector<std::pair<int, int>>& vertex_cells() const { return vc_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<double> volume_;
  std::vector<std::array<Vec3, 4>> grad_;
  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<int> contrib_ptr_;
  std::vector<Contribution> contrib_;
  std::vector<int> vc_ptr_;
  std::vector<std::pair<int, int>> vc_;
  Vector lumped_;
};

/// T_mn = 1/2 integral grad eta_m . grad eta_n.
SparseOperator assemble_stiffness(const FeSpace& space);
/// S_mn = integral eta_m eta_n.
SparseOperator assemble_mass(const FeSpace& space);
/// integral eta_m w_h eta_n with w_h the P1 interpolant of w (exact cubic quadrature).
SparseOperator assemble_weighted_mass(const FeSpace& space, std::span<const double> w);
/// Serial scatter assembly of the weighted mass; test reference.
SparseOperator assemble_weighted_mass_reference(const FeSpace& space, std::span<const double> w);

/// Boundary form integral over the cube surface of (x.n / |x|^2) eta_m eta_n,
/// i.e. the Robin term of the far-field condition dV/dr = -V/r.
SparseOperator assemble_farfield_boundary(const FeSpace& space);

NodalField nuclear_field(const Mesh& mesh, const NuclearPotentialSpec& spec);
/// -charge / (|x - center| + delta)
NodalField point_charge_field(const Mesh& mesh, const Vec3& center, double charge, double delta);

NodalField interpolate(const Mesh& mesh, const std::function<double(const Vec3&)>& f);

/// Mass-matrix inner product u^T S v.
double mass_inner(const SparseOperator& S, std::span<const double> u, std::span<const double> v);

/// The canonical element matrices on one cell, exposed for tests.
std::array<std::array<double, 4>, 4> element_stiffness(const std::array<Vec3, 4>& x);
std::array<std::array<double, 4>, 4> element_mass(double volume);

}  // namespace h2dft
