#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "app.hpp"

#ifndef H2DFT_VERSION
#define H2DFT_VERSION "unknown"
#endif

namespace h2dft::app {

namespace {

namespace fs = std::filesystem;

/// Collects timings, mesh hashes and written files for the manifest.
class Run {
 public:
  Run(const RunSettings& s, fs::path out, std::ostream& log) : s_(s), out_(std::move(out)), log_(log) {}

  template <typename F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      Run* run;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        run->timings_.push_back(
            {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
      }
    } rec{this, name, t0};
    return f();
  }

  void mesh(const Model& m) {
    const std::uint64_t h = m.mesh().hash();
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    if (std::find(hashes_.begin(), hashes_.end(), os.str()) == hashes_.end()) hashes_.push_back(os.str());
  }

  std::ofstream open(const std::string& file, bool binary = false) {
    fs::create_directories(out_);
    files_.push_back(file);
    std::ofstream os(out_ / file, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot write '" + (out_ / file).string() + "'");
    return os;
  }

  void text(const std::string& file, const std::string& content) { open(file) << content; }

  std::ostream& log() { return log_ << "[" << s_.command << "] "; }

  void manifest(int exit_code) {
    json m;
    m["command"] = s_.command;
    m["version"] = H2DFT_VERSION;
    m["exit_code"] = exit_code;
    m["config"] = s_.config;
    m["mesh_hashes"] = hashes_;
    json t = json::object();
    for (const auto& [k, v] : timings_) t[k] = t.contains(k) ? t[k].get<double>() + v : v;
    m["timings_seconds"] = t;
    m["threads"] = kernels::max_threads();
    m["outputs"] = files_;
    fs::create_directories(out_);
    std::ofstream(out_ / "manifest.json") << m.dump(2) << '\n';
  }

  const RunSettings& settings() const { return s_; }

 private:
  const RunSettings& s_;
  fs::path out_;
  std::ostream& log_;
  std::vector<std::pair<std::string, double>> timings_;
  std::vector<std::string> hashes_;
  std::vector<std::string> files_;
};

std::ostream& fmt(std::ostream& os) { return os << std::setprecision(12); }

json energy_json(const EnergyBreakdown& e) {
  return {{"total", e.total()}, {"kinetic", e.kinetic}, {"nuclear", e.nuclear}, {"hartree", e.hartree},
          {"exchange", e.exchange}};
}

json scf_json(const SCFReport& r) {
  json clamps = json::array();
  for (const auto& c : r.clamps) clamps.push_back({{"iteration", c.iteration}, {"spin", c.spin}, {"requested", c.requested}});
  return {{"converged", r.converged},     {"iterations", r.iterations},
          {"residual_plus", r.residual_plus}, {"residual_minus", r.residual_minus},
          {"sign_alternations", r.sign_alternations}, {"message", r.message},
          {"clamps", clamps},             {"energy_history", r.energy_history}};
}

SweepConfig sweep_config(const RunSettings& s) {
  SweepConfig c;
  c.discretization = s.discretization;
  c.scf = s.scf;
  c.tolerances = s.tolerances;
  c.symmetric_delocalized = s.symmetric_delocalized;
  c.dedup_distance = s.dedup_distance;
  c.compute_hessian = s.hessian_enabled;
  c.hessian = s.hessian;
  c.hessian_k = s.hessian_k;
  c.tol_eig = s.tol_eig;
  c.inits = s.inits;
  return c;
}

void write_fields(Run& run, const Model& model, const OrbitalState& st, const std::string& stem) {
  if (run.settings().write_checkpoint) {
    Checkpoint ck{model.mesh().hash(), st, model.nuclei().delta, run.settings().config.dump()};
    auto os = run.open(stem + ".ckpt", true);
    write_checkpoint(os, ck);
  }
  if (run.settings().write_vtk) {
    NodalField rho(st.c_plus.size());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = st.c_plus[i] * st.c_plus[i] + st.c_minus[i] * st.c_minus[i];
    const NodalField v = model.hartree_potential(model.density_load(st));
    auto os = run.open(stem + ".vtk");
    model.mesh().write_vtk(os, {{"psi_plus", &st.c_plus}, {"psi_minus", &st.c_minus}, {"rho", &rho}, {"V_ee", &v}});
  }
}

/// Exit code of a batch: 0 when something converged, else 4 if every item failed in a solver, else 3.
int batch_code(int converged, int solver_failures, int total) {
  if (converged > 0) return kOk;
  return solver_failures == total ? kSolverFailure : kNotConverged;
}

int cmd_solve(Run& run) {
  const auto& s = run.settings();
  const double alpha = *s.alpha, R = *s.R;
  auto model = run.stage("model", [&] { return make_model(s.discretization, R); });
  run.mesh(*model);
  run.log() << model->size() << " vertices, alpha " << alpha << ", bond length " << 2 * R << "\n";

  struct Item {
    InitKind init;
    OrbitalState state;
    SCFReport report;
    std::string error;
    BranchLabel label = BranchLabel::unclassified;
    EnergyBreakdown energy;
    StateMetrics metrics;
    int same_as = -1;  // index of an earlier init that reached the same state
  };
  std::vector<Item> items;
  for (InitKind init : s.inits) {
    Item it;
    it.init = init;
    SCFConfig scf = s.scf;
    scf.reflection_symmetric = s.scf.reflection_symmetric || (s.symmetric_delocalized && init == InitKind::delocalized);
    try {
      auto [st, rep] = run.stage("scf", [&] {
        return scf_solve(*model, initial_guess(*model, init, alpha, s.zeta_for(alpha)), scf);
      });
      it.state = std::move(st);
      it.report = std::move(rep);
      it.energy = total_energy(*model, it.state);
      it.metrics = state_metrics(*model, it.state);
      it.label = classify_branch(it.metrics, s.tolerances);
    } catch (const SolverError& e) {
      it.error = e.what();
    }
    run.log() << to_string(init) << ": "
              << (it.error.empty() ? (it.report.converged ? "converged" : "not converged") : "solver failure: " + it.error)
              << ", " << it.report.iterations << " iterations, E " << std::setprecision(10) << it.energy.total()
              << ", " << to_string(it.label) << "\n";
    items.push_back(std::move(it));
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (!items[j].report.converged) continue;
    for (std::size_t i = 0; i < j; ++i) {
      if (items[i].report.converged && items[i].same_as < 0 &&
          state_distance(*model, items[i].state, items[j].state) < s.dedup_distance) {
        items[j].same_as = static_cast<int>(i);
        break;
      }
    }
  }

  auto os = run.open("states.csv");
  fmt(os) << "init,branch,same_as,alpha,R,bond_length,E_total,E_kinetic,E_nuclear,E_hartree,E_exchange,eps_plus,"
             "eps_minus,s,d,iterations,residual_plus,residual_minus,converged\n";
  json summary;
  summary["alpha"] = alpha;
  summary["R"] = R;
  summary["bond_length"] = 2 * R;
  summary["vertices"] = model->size();
  summary["delta"] = model->nuclei().delta;
  json runs = json::array();
  int converged = 0, failures = 0, distinct = 0;
  for (const auto& it : items) {
    converged += it.report.converged;
    failures += !it.error.empty();
    const bool unique = it.report.converged && it.same_as < 0;
    distinct += unique;
    os << to_string(it.init) << ',' << to_string(it.label) << ','
       << (it.same_as >= 0 ? to_string(items[it.same_as].init) : "") << ',' << alpha << ',' << R << ',' << 2 * R << ','
       << it.energy.total() << ',' << it.energy.kinetic << ',' << it.energy.nuclear << ',' << it.energy.hartree << ','
       << it.energy.exchange << ',' << it.state.eps_plus << ',' << it.state.eps_minus << ',' << it.metrics.symmetry
       << ',' << it.metrics.localization() << ',' << it.report.iterations << ',' << it.report.residual_plus << ','
       << it.report.residual_minus << ',' << (it.report.converged ? "true" : "false") << '\n';
    json r;
    r["init"] = to_string(it.init);
    r["branch"] = to_string(it.label);
    r["same_as"] = it.same_as >= 0 ? json(to_string(items[it.same_as].init)) : json(nullptr);
    r["energy"] = energy_json(it.energy);
    r["eps"] = {it.state.eps_plus, it.state.eps_minus};
    r["s"] = it.metrics.symmetry;
    r["d"] = it.metrics.localization();
    r["mean_centroid"] = it.metrics.mean();
    r["scf"] = scf_json(it.report);
    if (!it.error.empty()) r["error"] = it.error;
    runs.push_back(r);
    if (unique) write_fields(run, *model, it.state, std::string("state_") + to_string(it.init));
  }
  summary["distinct_states"] = distinct;
  summary["runs"] = runs;
  run.text("summary.json", summary.dump(2) + "\n");
  run.log() << distinct << " distinct converged state(s)\n";
  if (failures > 0) return kSolverFailure;
  if (converged < static_cast<int>(items.size())) return kNotConverged;
  return kOk;
}

int cmd_sweep(Run& run) {
  const auto& s = run.settings();
  SweepConfig c = sweep_config(s);
  c.parameter = s.sweep_parameter;
  c.fixed_value = s.sweep_parameter == SweepParameter::alpha ? *s.R : *s.alpha;
  c.grid = s.sweep_values;
  run.log() << c.grid.size() << " values of " << to_string(c.parameter) << ", " << c.inits.size() << " inits\n";
  const auto pts = run.stage("sweep", [&] { return sweep(c); });
  {
    auto os = run.open("branches.csv");
    write_branch_csv(os, pts);
  }
  run.text("branches.json", branch_points_json(pts) + "\n");
  json b = nullptr;
  if (auto bif = detect_bifurcation(pts, c.parameter, c.scf.tol_energy)) {
    b = {{"parameter", to_string(c.parameter)}, {"value", bif->value}, {"method", bif->method}};
    if (c.parameter == SweepParameter::R) b["bond_length"] = 2 * bif->value;
    run.log() << "bifurcation at " << to_string(c.parameter) << " = " << bif->value << " (" << bif->method << ")\n";
  } else {
    run.log() << "no bifurcation detected\n";
  }
  run.text("bifurcation.json", json{{"bifurcation", b}}.dump(2) + "\n");
  int conv = 0, fail = 0;
  for (const auto& p : pts) {
    conv += p.converged;
    fail += !p.converged && !p.error.empty() && p.scf_iterations == 0;
  }
  return batch_code(conv, fail, static_cast<int>(pts.size()));
}

int cmd_phase(Run& run) {
  const auto& s = run.settings();
  const SweepConfig base = sweep_config(s);
  const auto pd = run.stage("phase", [&] { return phase_diagram(s.phase_alpha, s.phase_R, base); });
  {
    auto os = run.open("phase_boundary.csv");
    write_phase_csv(os, pd);
  }
  run.text("phase_boundary.json", phase_boundary_json(pd) + "\n");
  {
    auto os = run.open("phase_samples.csv");
    write_branch_csv(os, pd.samples);
  }
  for (const auto& b : pd.boundary)
    run.log() << "alpha " << b.alpha << ": "
              << (b.critical_R ? "critical bond length " + std::to_string(b.critical_bond_length()) : std::string("open"))
              << "\n";
  int conv = 0, fail = 0;
  for (const auto& p : pd.samples) {
    conv += p.converged;
    fail += !p.converged && !p.error.empty() && p.scf_iterations == 0;
  }
  return batch_code(conv, fail, static_cast<int>(pd.samples.size()));
}

int cmd_hessian(Run& run) {
  const auto& s = run.settings();
  const double alpha = *s.alpha, R = *s.R;
  auto model = run.stage("model", [&] { return make_model(s.discretization, R); });
  run.mesh(*model);
  OrbitalState st;
  json summary;
  if (!s.hessian_checkpoint.empty()) {
    std::ifstream in(s.hessian_checkpoint, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint '" + s.hessian_checkpoint + "'");
    Checkpoint ck;
    try {
      ck = read_checkpoint(in);
    } catch (const std::runtime_error& e) {
      throw ConfigError(std::string("checkpoint: ") + e.what());
    }
    if (ck.mesh_hash != model->mesh().hash()) throw ConfigError("checkpoint was written on a different mesh");
    if (ck.state.alpha != alpha || ck.state.R != R) throw ConfigError("checkpoint alpha or R differs from the config");
    st = std::move(ck.state);
    summary["state_source"] = "checkpoint";
  } else {
    SCFConfig scf = s.scf;
    scf.reflection_symmetric = s.scf.reflection_symmetric || (s.symmetric_delocalized && s.init == InitKind::delocalized);
    auto [res, rep] = run.stage("scf", [&] {
      return scf_solve(*model, initial_guess(*model, s.init, alpha, s.zeta_for(alpha)), scf);
    });
    st = std::move(res);
    summary["state_source"] = to_string(s.init);
    summary["scf"] = scf_json(rep);
    run.log() << "SCF " << (rep.converged ? "converged" : "not converged") << " in " << rep.iterations << " iterations\n";
    if (!rep.converged) {
      run.text("hessian.json", summary.dump(2) + "\n");
      return kNotConverged;
    }
  }
  const StateMetrics m = state_metrics(*model, st);
  summary["alpha"] = alpha;
  summary["R"] = R;
  summary["bond_length"] = 2 * R;
  summary["branch"] = to_string(classify_branch(m, s.tolerances));
  summary["energy"] = energy_json(total_energy(*model, st));
  summary["s"] = m.symmetry;
  summary["d"] = m.localization();
  const auto rep = run.stage("hessian", [&] { return smallest_eigenpairs(*model, st, s.hessian_k, s.tol_eig, s.hessian); });
  summary["variant"] = to_string(s.hessian.variant);
  summary["tol_eig"] = s.tol_eig;
  summary["converged"] = rep.converged;
  summary["iterations"] = rep.iterations;
  summary["eigenvalues"] = rep.eigenvalues;
  summary["residuals"] = rep.residuals;
  summary["n_negative"] = rep.n_negative;
  summary["classification"] = rep.classification();
  auto os = run.open("hessian.csv");
  fmt(os) << "index,eigenvalue,residual\n";
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
    os << i << ',' << rep.eigenvalues[i] << ',' << rep.residuals[i] << '\n';
  run.text("hessian.json", summary.dump(2) + "\n");
  run.log() << "classification " << rep.classification() << "\n";
  return rep.converged ? kOk : kNotConverged;
}

json profile_json(const RadialProfile& p) {
  return {{"E", p.E},
          {"nonlinearity", p.nonlinearity},
          {"mass", p.mass},
          {"center_value", p.center_value},
          {"gradient_integral", gradient_integral(p)},
          {"nonlinear_integral", nonlinear_integral(p)},
          {"F", F_energy(p)},
          {"ode_residual", ode_residual(p)}};
}

int cmd_soliton(Run& run) {
  const auto& s = run.settings();
  const auto u = run.stage("shooting", [&] { return solve_normalized_profile(s.radial); });
  const auto phi = rescale_to_mass_one(u);
  {
    auto os = run.open("normalized_profile.csv");
    write_profile_csv(os, u);
  }
  {
    auto os = run.open("profile.csv");
    write_profile_csv(os, phi);
  }
  run.text("soliton.json", json{{"normalized", profile_json(u)}, {"mass_one", profile_json(phi)}}.dump(2) + "\n");
  run.log() << "E " << std::setprecision(10) << phi.E << ", F " << F_energy(phi) << "\n";
  return kOk;
}

int cmd_compare(Run& run) {
  const auto& s = run.settings();
  const double R = *s.R;
  const auto phi = rescale_to_mass_one(run.stage("shooting", [&] { return solve_normalized_profile(s.radial); }));
  auto model = run.stage("model", [&] { return make_model(s.discretization, R); });
  run.mesh(*model);
  auto os = run.open("compare.csv");
  fmt(os) << "alpha,bond_length,converged,x_plus,x_minus,center_error_plus,center_error_minus,h1_plus,h1_minus,"
             "energy_ratio,reference_ratio\n";
  json rows = json::array();
  int conv = 0, fail = 0;
  for (double alpha : s.compare_alphas) {
    json r{{"alpha", alpha}};
    try {
      auto [st, rep] = run.stage("scf", [&] {
        return scf_solve(*model, initial_guess(*model, s.init, alpha, s.zeta_for(alpha)), s.scf);
      });
      conv += rep.converged;
      const auto c = compare_rescaled(*model, st, phi);
      os << alpha << ',' << 2 * R << ',' << (rep.converged ? "true" : "false") << ',' << c.x_plus.x << ','
         << c.x_minus.x << ',' << c.center_error_plus << ',' << c.center_error_minus << ',' << c.h1_plus << ','
         << c.h1_minus << ',' << c.energy_ratio << ',' << c.reference_ratio << '\n';
      r["converged"] = rep.converged;
      r["scf"] = scf_json(rep);
      r["x_plus"] = {c.x_plus.x, c.x_plus.y, c.x_plus.z};
      r["x_minus"] = {c.x_minus.x, c.x_minus.y, c.x_minus.z};
      r["h1"] = {c.h1_plus, c.h1_minus};
      r["center_error"] = {c.center_error_plus, c.center_error_minus};
      r["energy_ratio"] = c.energy_ratio;
      r["reference_ratio"] = c.reference_ratio;
      run.log() << "alpha " << alpha << ": " << (rep.converged ? "converged" : "not converged") << ", H1 "
                << c.h1_plus << ", E/alpha^2 " << c.energy_ratio << " vs " << c.reference_ratio << "\n";
    } catch (const SolverError& e) {
      ++fail;
      r["error"] = e.what();
      os << alpha << ',' << 2 * R << ",false,NA,NA,NA,NA,NA,NA,NA,NA\n";
    }
    rows.push_back(r);
  }
  run.text("compare.json", json{{"init", to_string(s.init)}, {"rows", rows}}.dump(2) + "\n");
  const int n = static_cast<int>(s.compare_alphas.size());
  if (conv == n) return kOk;
  return fail == n ? kSolverFailure : kNotConverged;
}

}  // namespace

int run(const RunSettings& s, const std::filesystem::path& out, std::ostream& log) {
  Run r(s, out, log);
  int code = kOk;
  try {
    if (s.command == "solve") code = cmd_solve(r);
    else if (s.command == "sweep") code = cmd_sweep(r);
    else if (s.command == "phase") code = cmd_phase(r);
    else if (s.command == "hessian") code = cmd_hessian(r);
    else if (s.command == "soliton") code = cmd_soliton(r);
    else if (s.command == "compare") code = cmd_compare(r);
    else throw ConfigError("unknown command '" + s.command + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const SolverError& e) {
    log << "[" << s.command << "] solver failure: " << e.what() << "\n";
    code = kSolverFailure;
  } catch (const SolitonError& e) {
    log << "[" << s.command << "] shooting failure: " << e.what() << "\n";
    code = kSolverFailure;
  } catch (const MeshError& e) {
    log << "[" << s.command << "] mesh failure: " << e.what() << "\n";
    code = kSolverFailure;
  }
  r.manifest(code);
  return code;
}

}  // namespace h2dft::app
