#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "h2dft/hessian.hpp"
#include "h2dft/scf.hpp"

namespace h2dft {

enum class BranchLabel { delocalized, antiferro, ionic_left, ionic_right, unclassified };
const char* to_string(BranchLabel b);
BranchLabel branch_label_from_string(const std::string& s);

struct BranchTolerances {
  double s_tol = 1e-3;  // symmetry metric below this: same spatial orbital
  double d_tol = 0.2;   // centroid separations (au) above this count as localized
};

/// Branch from state metrics: ionic when the mean spin centroid is off centre
/// by more than d_tol, delocalized when s < s_tol, antiferro when the spin
/// centroids are separated by more than d_tol, unclassified otherwise.
BranchLabel classify_branch(const StateMetrics& m, const BranchTolerances& tol = {});

struct HessianSummary {
  bool computed = false;
  bool converged = false;
  std::vector<double> eigenvalues;
  int n_negative = 0;
  std::string classification;
  std::string error;
};

struct BranchPoint {
  double alpha = 0, R = 0, bond_length = 0;
  InitKind init = InitKind::delocalized;
  BranchLabel label = BranchLabel::unclassified;
  EnergyBreakdown energy;
  double s = 0;     // |psi_+ - psi_-|_S, sign-aligned
  double d = 0;     // centroid(rho_+) - centroid(rho_-) along e1
  double mean = 0;  // mean of the two centroids along e1
  bool converged = false;
  bool warm_started = false;
  int scf_iterations = 0;
  std::string error;                // SCF or solver failure message
  std::vector<InitKind> merged;     // other inits that reached the same state
  HessianSummary hessian;
  std::optional<OrbitalState> state;
};

enum class SweepParameter { alpha, R };
const char* to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(const std::string& s);

struct SweepConfig {
  SweepParameter parameter = SweepParameter::R;
  double fixed_value = 0.93;  // alpha for R sweeps, R for alpha sweeps
  std::vector<double> grid;   // values of the swept parameter, monotone
  std::vector<InitKind> inits{InitKind::delocalized, InitKind::antiferro};
  DiscretizationConfig discretization;
  SCFConfig scf;
  BranchTolerances tolerances;
  /// Track the delocalized branch under mirror symmetry (see SCFConfig).
  bool symmetric_delocalized = true;
  /// States closer than this in S-distance are reported once.
  double dedup_distance = 1e-4;
  bool compute_hessian = false;
  HessianConfig hessian;
  int hessian_k = 6;
  double tol_eig = 1e-4;
  /// Keep converged states in the returned points.
  bool keep_states = false;

  void validate() const;
};

/// S-distance between two states, minimized over orbital signs and over
/// exchanging the spin labels.
double state_distance(const Model& model, const OrbitalState& a, const OrbitalState& b);

/// Runs the SCF along the grid for every init, warm-starting each init from
/// its own previous converged state. An init that merged into another one
/// restarts from its initial guess at the next value. Failures are recorded per point.
std::vector<BranchPoint> sweep(const SweepConfig& cfg);

struct Bifurcation {
  double value = 0;  // critical value of the swept parameter
  std::string method;  // "eigenvalue" or "energy"
};

/// Primary: first interval where the smallest constrained eigenvalue on the
/// delocalized branch changes sign from positive to negative, located by
/// linear interpolation. Fallback: midpoint of the first interval where the
/// antiferro energy drops below the delocalized one by more than
/// 10 tol_energy. Points are matched by label and sorted by `parameter`.
std::optional<Bifurcation> detect_bifurcation(const std::vector<BranchPoint>& points, SweepParameter parameter,
                                              double tol_energy = 1e-6);

struct PhaseBoundaryPoint {
  double alpha = 0;
  std::optional<double> critical_R;  // empty: no symmetry breaking inside the sampled range
  std::string method;
  int failed_points = 0;
  double critical_bond_length() const { return critical_R ? 2 * *critical_R : 0.0; }
};

struct PhaseDiagram {
  std::vector<double> alpha_grid, R_grid;
  std::vector<BranchPoint> samples;
  std::vector<PhaseBoundaryPoint> boundary;
};

/// One R sweep (delocalized and antiferro inits) per alpha, each run through detect_bifurcation.
PhaseDiagram phase_diagram(const std::vector<double>& alpha_grid, const std::vector<double>& R_grid,
                           const SweepConfig& base);

/// alpha, R, bond_length, branch, E_total, E_kinetic, E_nuclear, E_hartree,
/// E_exchange, s, d, n_negative_eigs, converged. Missing eigenvalue counts are "NA".
void write_branch_csv(std::ostream& os, const std::vector<BranchPoint>& points);
/// Full per-point records including init, Hessian eigenvalues and errors.
std::string branch_points_json(const std::vector<BranchPoint>& points);
/// alpha, critical_R, critical_bond_length, method, open.
void write_phase_csv(std::ostream& os, const PhaseDiagram& pd);
std::string phase_boundary_json(const PhaseDiagram& pd);

}  // namespace h2dft
