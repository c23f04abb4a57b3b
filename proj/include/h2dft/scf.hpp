#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "h2dft/hartree.hpp"
#include "h2dft/linsolve.hpp"
#include "h2dft/operators.hpp"

namespace h2dft {

/// Two spin orbitals on a mesh. Orbital energies follow the eigenvalue
/// convention (negative for bound states).
struct OrbitalState {
  NodalField c_plus, c_minus;
  double eps_plus = 0, eps_minus = 0;
  double alpha = 0;
  double R = 0;

  NodalField& c(int spin) { return spin == 0 ? c_plus : c_minus; }
  const NodalField& c(int spin) const { return spin == 0 ? c_plus : c_minus; }
  double& eps(int spin) { return spin == 0 ? eps_plus : eps_minus; }
  double eps(int spin) const { return spin == 0 ? eps_plus : eps_minus; }
};

/// Starting configurations: both orbitals on both nuclei, opposite spins on
/// opposite nuclei, or both electrons on the nucleus at -R e1 (left) / +R e1 (right).
enum class InitKind { delocalized, antiferro, ionic_left, ionic_right };
enum class EnergyUpdate { greens_correction, rayleigh };

const char* to_string(InitKind k);
InitKind init_kind_from_string(const std::string& s);
const char* to_string(EnergyUpdate u);
EnergyUpdate energy_update_from_string(const std::string& s);

struct SCFConfig {
  double tol_energy = 1e-6;
  int max_iterations = 200;
  double mixing = 0.5;
  EnergyUpdate energy_update = EnergyUpdate::greens_correction;
  InitKind init = InitKind::antiferro;
  double gaussian_zeta = 0.6;
  double eps_floor = 0.01;
  /// Replace each orbital by the average with its mirror image c(-x) after
  /// every update. Tracks the parity-symmetric branch past the point where it
  /// becomes unstable towards ionic states.
  bool reflection_symmetric = false;
  SolverConfig helmholtz{1e-10, 10000, PreconditionerKind::multigrid};

  void validate() const;
};

struct ClampEvent {
  int iteration;
  int spin;
  double requested;  // epsilon before clamping
};

struct SCFReport {
  int iterations = 0;
  std::vector<double> energy_history;
  double residual_plus = 0, residual_minus = 0;
  std::vector<ClampEvent> clamps;
  int sign_alternations = 0;
  bool converged = false;
  std::string message;
};

struct EnergyBreakdown {
  double kinetic = 0, nuclear = 0, hartree = 0, exchange = 0;
  double total() const { return kinetic + nuclear + hartree + exchange; }
};

/// Everything that depends only on the mesh and the nuclei: operators, the
/// nuclear field, the Hartree solver and the Helmholtz multigrid levels.
class Model {
 public:
  Model(std::shared_ptr<const Mesh> mesh, NuclearPotentialSpec nuclei, HartreeConfig hartree = {});
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const FeSpace& space() const { return space_; }
  const SparseOperator& T() const { return T_; }
  const SparseOperator& S() const { return S_; }
  const Vector& lumped() const { return space_.lumped_mass(); }
  const NodalField& v_nuc() const { return v_nuc_; }
  const NuclearPotentialSpec& nuclei() const { return nuclei_; }
  const HartreeSolver& hartree() const { return *hartree_; }
  const ShiftedLevels& helmholtz_levels() const { return *shifted_; }
  std::span<const char> fixed() const { return space_.boundary_mask(); }
  int size() const { return space_.size(); }

  /// r_m = integral eta_m (psi_+^2 + psi_-^2).
  Vector density_load(const OrbitalState& s) const;
  /// Hartree potential of a density load.
  NodalField hartree_potential(std::span<const double> load, std::span<const double> guess = {}) const;

  /// Solves (T - shift S) x = b with boundary rows eliminated.
  SolveReport helmholtz_solve(double shift, std::span<const double> b, std::span<double> x,
                              const SolverConfig& cfg) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  FeSpace space_;
  SparseOperator T_, S_;
  NuclearPotentialSpec nuclei_;
  NodalField v_nuc_;
  std::unique_ptr<HartreeSolver> hartree_;
  std::unique_ptr<ShiftedLevels> shifted_;
};

/// Mesh and operator settings shared by every model of a run.
struct DiscretizationConfig {
  double half_extent = 25.0;
  int initial_cells_per_axis = 2;
  int local_refine_rounds = 8;
  int global_refine_rounds = 2;
  double h_min_floor = 1e-4;
  /// Nuclear softening; 0 selects default_nuclear_delta for the mesh.
  double delta = 0.0;
  HartreeConfig hartree;

  void validate() const;
  MeshConfig mesh_config(double R) const;
};

/// Builds the mesh for nuclei at +-R e1 and the model on it.
std::unique_ptr<Model> make_model(const DiscretizationConfig& cfg, double R);

/// Normalized Gaussian starting orbitals centred at +-R e1.
OrbitalState initial_guess(const Model& model, InitKind kind, double alpha, double zeta);
/// Starting state from given orbital fields (normalized, boundary zeroed).
OrbitalState custom_guess(const Model& model, NodalField plus, NodalField minus, double alpha);

/// S-normalizes c and zeroes its boundary values.
void normalize(const Model& model, NodalField& c);
double s_norm(const Model& model, std::span<const double> c);

/// f_sigma = -(M_{V_nuc + V_ee}) c_sigma + (4/3) alpha l |c_sigma|^{2/3} c_sigma,
/// zero on the boundary.
std::pair<Vector, Vector> effective_rhs(const Model& model, const OrbitalState& s, std::span<const double> v_ee);
Vector effective_rhs(const Model& model, std::span<const double> c, double alpha, std::span<const double> v_ee);

struct HelmholtzResult {
  Vector c;
  SolveReport report;
};
/// Raw solution of (T - eps S) c = f; `eps` must already be clamped.
HelmholtzResult helmholtz_update(const Model& model, double eps, std::span<const double> f,
                                 std::span<const double> guess, const SolverConfig& cfg);

/// Correction of the orbital energy from one Helmholtz step:
/// (f.phi - f.phi_tilde) / phi_tilde^T S phi_tilde.
double energy_correction(const SparseOperator& S, std::span<const double> phi, std::span<const double> phi_tilde,
                         std::span<const double> f);

EnergyBreakdown total_energy(const Model& model, const OrbitalState& s);
/// Same, with the Hartree potential of the state's density supplied.
EnergyBreakdown total_energy(const Model& model, const OrbitalState& s, std::span<const double> v_ee);

/// Gradient of the energy with respect to c_sigma (boundary rows zeroed).
Vector energy_gradient(const Model& model, const OrbitalState& s, int spin, std::span<const double> v_ee);

/// Euler-Lagrange residual (T - eps S) c - f in the lumped dual norm
/// sqrt(sum r_m^2 / l_m) over interior vertices.
double euler_lagrange_residual(const Model& model, std::span<const double> c, double eps, std::span<const double> f);

/// Rayleigh quotient c^T (T c - f), the multiplier consistent with c.
double rayleigh_energy(const Model& model, std::span<const double> c, std::span<const double> f);

std::pair<OrbitalState, SCFReport> scf_solve(const Model& model, OrbitalState start, const SCFConfig& cfg);

/// Spin-resolved metrics: s = |psi_+ - psi_-|_S, centroids of rho_+ and rho_- along e1.
struct StateMetrics {
  double symmetry = 0;
  double centroid_plus = 0, centroid_minus = 0;
  double localization() const { return centroid_plus - centroid_minus; }
  double mean() const { return 0.5 * (centroid_plus + centroid_minus); }
};
StateMetrics state_metrics(const Model& model, const OrbitalState& s);
/// 3D density centroid of one spin orbital.
Vec3 orbital_centroid(const Model& model, std::span<const double> c);

/// Moves a state to another mesh by P1 interpolation. When R changes, points
/// are mapped by scaling the e1 coordinate with R_old/R_new so nuclei land on
/// nuclei.
OrbitalState transfer_state(const Mesh& from, const OrbitalState& s, const Model& to);

/// Versioned binary checkpoint.
struct Checkpoint {
  std::uint64_t mesh_hash = 0;
  OrbitalState state;
  double delta = 0;
  std::string config;  // JSON echo of the run configuration
};
void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);

}  // namespace h2dft
