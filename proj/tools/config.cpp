#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>

#include "app.hpp"

namespace h2dft::app {

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "sweep", "phase", "hessian", "soliton", "compare"};
  return names;
}

json default_config() {
  json solver = {{"rtol", 1e-10}, {"max_iterations", 10000}, {"preconditioner", "multigrid"}};
  return {
      {"name", nullptr},
      {"system",
       {{"alpha", nullptr},
        {"R", nullptr},
        {"bond_length", nullptr},
        {"init", "antiferro"},
        {"inits", {"delocalized", "antiferro"}}}},
      {"mesh",
       {{"half_extent", 25.0},
        {"initial_cells_per_axis", 2},
        {"local_refine_rounds", 8},
        {"global_refine_rounds", 2},
        {"h_min_floor", 1e-4},
        {"delta", 0.0}}},
      {"hartree", {{"boundary", "robin"}, {"solver", solver}}},
      {"scf",
       {{"tol_energy", 1e-6},
        {"max_iterations", 200},
        {"mixing", 0.5},
        {"energy_update", "greens_correction"},
        {"gaussian_zeta", 0.6},
        {"zeta_per_alpha2", 0.0},
        {"eps_floor", 0.01},
        {"reflection_symmetric", false},
        {"helmholtz", solver}}},
      {"branch", {{"s_tol", 1e-3}, {"d_tol", 0.2}, {"dedup_distance", 1e-4}, {"symmetric_delocalized", true}}},
      {"hessian",
       {{"enabled", false},
        {"variant", "full"},
        {"k", 6},
        {"tol_eig", 1e-4},
        {"max_iterations", 300},
        {"guard_vectors", 2},
        {"seed", 1},
        {"max_state_residual", 1e-4},
        {"checkpoint", ""},
        {"poisson", solver}}},
      {"sweep", {{"parameter", nullptr}, {"values", nullptr}}},
      {"phase", {{"alpha", nullptr}, {"R", nullptr}, {"bond_length", nullptr}}},
      {"soliton",
       {{"r_max", 20.0},
        {"step", 1e-3},
        {"bracket_lo", 1.5},
        {"bracket_hi", 10.0},
        {"bisection_tol", 1e-16},
        {"tail_threshold", 1e-6}}},
      {"compare", {{"alphas", nullptr}}},
      {"output", {{"vtk", true}, {"checkpoint", true}}},
  };
}

json read_config_file(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  if (j.contains("command") && j.contains("config")) {
    if (j["command"] != command)
      throw ConfigError("manifest was written by '" + j["command"].get<std::string>() + "', not '" + command + "'");
    return j["config"];
  }
  return j;
}

namespace {

void merge_into(json& base, const json& user, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      if (!it.value().is_object()) throw ConfigError("config key '" + key + "' must be an object");
      merge_into(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

const json& at(const json& cfg, const std::string& dotted) {
  const json* j = &cfg;
  std::size_t pos = 0;
  while (true) {
    const auto dot = dotted.find('.', pos);
    j = &j->at(dotted.substr(pos, dot - pos));
    if (dot == std::string::npos) return *j;
    pos = dot + 1;
  }
}

template <typename T>
T get(const json& cfg, const std::string& key) {
  try {
    const json& v = at(cfg, key);
    if (v.is_null()) throw ConfigError("missing required config key '" + key + "'");
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
    } else {
      if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

bool present(const json& cfg, const std::string& key) { return !at(cfg, key).is_null(); }

SolverConfig solver_from(const json& cfg, const std::string& key) {
  SolverConfig s;
  s.rtol = get<double>(cfg, key + ".rtol");
  s.max_iterations = get<int>(cfg, key + ".max_iterations");
  s.preconditioner = preconditioner_from_string(get<std::string>(cfg, key + ".preconditioner"));
  return s;
}

/// A list of numbers or {"start", "stop", "step"} with the end point included.
std::vector<double> grid_from(const json& cfg, const std::string& key) {
  const json& g = at(cfg, key);
  if (g.is_null()) throw ConfigError("missing required config key '" + key + "'");
  std::vector<double> out;
  if (g.is_array()) {
    for (const auto& v : g) {
      if (!v.is_number()) throw ConfigError("config key '" + key + "' must list numbers");
      out.push_back(v.get<double>());
    }
  } else if (g.is_object()) {
    for (const char* k : {"start", "stop", "step"})
      if (!g.contains(k) || !g[k].is_number()) throw ConfigError("config key '" + key + "' needs numeric start, stop, step");
    const double a = g["start"], b = g["stop"], h = g["step"];
    if (!(h != 0) || (b - a) / h < 0) throw ConfigError("config key '" + key + "': step does not lead from start to stop");
    const long n = std::lround((b - a) / h);
    if (std::abs(a + n * h - b) > 1e-9 * std::max(1.0, std::abs(b)))
      throw ConfigError("config key '" + key + "': (stop - start) is not a multiple of step");
    for (long i = 0; i <= n; ++i) out.push_back(i == n ? b : a + i * h);
  } else {
    throw ConfigError("config key '" + key + "' must be a list or {start, stop, step}");
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
  return out;
}

std::optional<double> system_R(const json& cfg) {
  const bool r = present(cfg, "system.R"), b = present(cfg, "system.bond_length");
  if (r && b) throw ConfigError("give only one of system.R and system.bond_length");
  if (r) return get<double>(cfg, "system.R");
  if (b) return 0.5 * get<double>(cfg, "system.bond_length");
  return std::nullopt;
}

double require_R(const RunSettings& s) {
  if (!s.R) throw ConfigError("missing required config key 'system.R' (or 'system.bond_length')");
  if (!(*s.R > 0)) throw ConfigError("system.R must be positive");
  return *s.R;
}

double require_alpha(const RunSettings& s) {
  if (!s.alpha) throw ConfigError("missing required config key 'system.alpha'");
  if (!(*s.alpha >= 0)) throw ConfigError("system.alpha must be >= 0");
  return *s.alpha;
}

}  // namespace

json merge_config(const json& user) {
  json cfg = default_config();
  merge_into(cfg, user, "");
  return cfg;
}

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* j = &cfg;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot - pos);
    if (!j->is_object() || !j->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    j = &(*j)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (j->is_object()) throw ConfigError("config key '" + key + "' is a section, not a value");
  *j = value;
}

double RunSettings::zeta_for(double a) const { return std::max(scf.gaussian_zeta, zeta_per_alpha2 * a * a); }

RunSettings resolve(const std::string& command, const json& cfg) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end())
    throw ConfigError("unknown command '" + command + "'");
  RunSettings s;
  s.command = command;
  s.config = cfg;
  try {
    s.name = present(cfg, "name") ? get<std::string>(cfg, "name") : command;
    if (!std::regex_match(s.name, std::regex("[A-Za-z0-9_][A-Za-z0-9_.-]*")))
      throw ConfigError("name '" + s.name + "' must be a plain directory name");

    auto& d = s.discretization;
    d.half_extent = get<double>(cfg, "mesh.half_extent");
    d.initial_cells_per_axis = get<int>(cfg, "mesh.initial_cells_per_axis");
    d.local_refine_rounds = get<int>(cfg, "mesh.local_refine_rounds");
    d.global_refine_rounds = get<int>(cfg, "mesh.global_refine_rounds");
    d.h_min_floor = get<double>(cfg, "mesh.h_min_floor");
    d.delta = get<double>(cfg, "mesh.delta");
    d.hartree.boundary = hartree_boundary_from_string(get<std::string>(cfg, "hartree.boundary"));
    d.hartree.solver = solver_from(cfg, "hartree.solver");
    d.validate();

    auto& f = s.scf;
    f.tol_energy = get<double>(cfg, "scf.tol_energy");
    f.max_iterations = get<int>(cfg, "scf.max_iterations");
    f.mixing = get<double>(cfg, "scf.mixing");
    f.energy_update = energy_update_from_string(get<std::string>(cfg, "scf.energy_update"));
    f.gaussian_zeta = get<double>(cfg, "scf.gaussian_zeta");
    f.eps_floor = get<double>(cfg, "scf.eps_floor");
    f.reflection_symmetric = get<bool>(cfg, "scf.reflection_symmetric");
    f.helmholtz = solver_from(cfg, "scf.helmholtz");
    f.validate();
    s.zeta_per_alpha2 = get<double>(cfg, "scf.zeta_per_alpha2");
    if (!(s.zeta_per_alpha2 >= 0)) throw ConfigError("scf.zeta_per_alpha2 must be >= 0");

    s.tolerances.s_tol = get<double>(cfg, "branch.s_tol");
    s.tolerances.d_tol = get<double>(cfg, "branch.d_tol");
    s.dedup_distance = get<double>(cfg, "branch.dedup_distance");
    s.symmetric_delocalized = get<bool>(cfg, "branch.symmetric_delocalized");
    if (!(s.tolerances.s_tol > 0 && s.tolerances.d_tol > 0 && s.dedup_distance > 0))
      throw ConfigError("branch tolerances must be positive");

    auto& h = s.hessian;
    h.variant = hessian_variant_from_string(get<std::string>(cfg, "hessian.variant"));
    h.max_iterations = get<int>(cfg, "hessian.max_iterations");
    h.guard_vectors = get<int>(cfg, "hessian.guard_vectors");
    const int seed = get<int>(cfg, "hessian.seed");
    if (seed < 0) throw ConfigError("hessian.seed must be >= 0");
    h.seed = static_cast<unsigned>(seed);
    h.max_state_residual = get<double>(cfg, "hessian.max_state_residual");
    h.poisson = solver_from(cfg, "hessian.poisson");
    h.validate();
    s.hessian_enabled = get<bool>(cfg, "hessian.enabled");
    s.hessian_k = get<int>(cfg, "hessian.k");
    s.tol_eig = get<double>(cfg, "hessian.tol_eig");
    if (s.hessian_k < 1) throw ConfigError("hessian.k must be >= 1");
    if (!(s.tol_eig > 0)) throw ConfigError("hessian.tol_eig must be positive");
    s.hessian_checkpoint = get<std::string>(cfg, "hessian.checkpoint");

    auto& r = s.radial;
    r.r_max = get<double>(cfg, "soliton.r_max");
    r.step = get<double>(cfg, "soliton.step");
    r.bracket_lo = get<double>(cfg, "soliton.bracket_lo");
    r.bracket_hi = get<double>(cfg, "soliton.bracket_hi");
    r.bisection_tol = get<double>(cfg, "soliton.bisection_tol");
    r.tail_threshold = get<double>(cfg, "soliton.tail_threshold");
    r.validate();

    s.write_vtk = get<bool>(cfg, "output.vtk");
    s.write_checkpoint = get<bool>(cfg, "output.checkpoint");

    if (present(cfg, "system.alpha")) s.alpha = get<double>(cfg, "system.alpha");
    s.R = system_R(cfg);
    s.init = init_kind_from_string(get<std::string>(cfg, "system.init"));
    const json& inits = at(cfg, "system.inits");
    if (!inits.is_array() || inits.empty()) throw ConfigError("system.inits must be a non-empty list");
    for (const auto& k : inits) {
      if (!k.is_string()) throw ConfigError("system.inits must list init names");
      s.inits.push_back(init_kind_from_string(k.get<std::string>()));
    }

    if (command == "solve" || command == "hessian") {
      require_alpha(s);
      require_R(s);
    } else if (command == "sweep") {
      const std::string p = get<std::string>(cfg, "sweep.parameter");
      s.sweep_values = grid_from(cfg, "sweep.values");
      if (p == "alpha") {
        s.sweep_parameter = SweepParameter::alpha;
        require_R(s);
      } else if (p == "R" || p == "bond_length") {
        s.sweep_parameter = SweepParameter::R;
        if (p == "bond_length")
          for (double& v : s.sweep_values) v *= 0.5;
        require_alpha(s);
      } else {
        throw ConfigError("sweep.parameter must be alpha, R or bond_length");
      }
      SweepConfig probe;
      probe.parameter = s.sweep_parameter;
      probe.fixed_value = s.sweep_parameter == SweepParameter::alpha ? *s.R : *s.alpha;
      probe.grid = s.sweep_values;
      probe.inits = s.inits;
      probe.discretization = d;
      probe.scf = f;
      probe.hessian = h;
      probe.hessian_k = s.hessian_k;
      probe.tol_eig = s.tol_eig;
      probe.compute_hessian = s.hessian_enabled;
      probe.validate();
    } else if (command == "phase") {
      s.phase_alpha = grid_from(cfg, "phase.alpha");
      const bool r = present(cfg, "phase.R"), b = present(cfg, "phase.bond_length");
      if (r == b) throw ConfigError("give exactly one of phase.R and phase.bond_length");
      s.phase_R = grid_from(cfg, r ? "phase.R" : "phase.bond_length");
      if (b)
        for (double& v : s.phase_R) v *= 0.5;
      if (!std::is_sorted(s.phase_alpha.begin(), s.phase_alpha.end()) ||
          !std::is_sorted(s.phase_R.begin(), s.phase_R.end()))
        throw ConfigError("phase grids must be sorted");
      for (double a : s.phase_alpha)
        if (!(a >= 0)) throw ConfigError("phase.alpha values must be >= 0");
      for (double v : s.phase_R)
        if (!(v > 0)) throw ConfigError("phase R values must be positive");
    } else if (command == "compare") {
      require_R(s);
      s.compare_alphas = grid_from(cfg, "compare.alphas");
      for (double a : s.compare_alphas)
        if (!(a > 0)) throw ConfigError("compare.alphas must be positive");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const MeshError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::filesystem::path output_directory(const RunSettings& s) {
  const char* root = std::getenv(kOutputRootEnv);
  return std::filesystem::path(root && *root ? root : "output") / s.name;
}

}  // namespace h2dft::app
