#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2dft/continuation.hpp"
#include "h2dft/hessian.hpp"
#include "h2dft/soliton.hpp"

namespace h2dft::app {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNotConverged = 3, kSolverFailure = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Environment variable naming the directory under which every run writes.
inline constexpr const char* kOutputRootEnv = "H2DFT_OUTPUT_ROOT";

const std::vector<std::string>& command_names();

/// Every configuration key with its default; null marks a key some commands require.
json default_config();

/// Reads a config file. A run manifest is accepted too: its "config" entry is
/// used and its "command" must match `command`.
json read_config_file(const std::filesystem::path& path, const std::string& command);

/// Deep merge of `user` over the defaults; unknown keys are rejected.
json merge_config(const json& user);

/// Applies "dotted.key=value"; the value is parsed as JSON, falling back to a string.
void apply_override(json& cfg, const std::string& assignment);

/// Resolved settings for one command, validated before anything is written.
struct RunSettings {
  std::string command;
  std::string name;
  json config;
  DiscretizationConfig discretization;
  SCFConfig scf;
  BranchTolerances tolerances;
  double dedup_distance = 1e-4;
  bool symmetric_delocalized = true;
  HessianConfig hessian;
  bool hessian_enabled = false;
  int hessian_k = 6;
  double tol_eig = 1e-4;
  RadialGridConfig radial;
  double zeta_per_alpha2 = 0;
  bool write_vtk = true, write_checkpoint = true;

  std::optional<double> alpha, R;  // system.alpha, system.R (or bond_length / 2)
  InitKind init = InitKind::antiferro;
  std::vector<InitKind> inits;
  SweepParameter sweep_parameter = SweepParameter::R;
  std::vector<double> sweep_values;  // alpha or R values, bond lengths already halved
  std::vector<double> phase_alpha, phase_R;
  std::vector<double> compare_alphas;
  std::string hessian_checkpoint;  // optional state to analyse instead of solving

  /// Starting Gaussian exponent: max(gaussian_zeta, zeta_per_alpha2 alpha^2).
  double zeta_for(double a) const;
};

/// Converts and validates; throws ConfigError naming the offending key.
RunSettings resolve(const std::string& command, const json& cfg);

/// Output directory: $H2DFT_OUTPUT_ROOT (default "output") / name.
std::filesystem::path output_directory(const RunSettings& s);

/// Runs a command, writing into `out` and progress lines to `log`. Returns an ExitCode.
int run(const RunSettings& s, const std::filesystem::path& out, std::ostream& log);

}  // namespace h2dft::app
