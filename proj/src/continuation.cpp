#include "h2dft/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace h2dft {

using json = nlohmann::ordered_json;

const char* to_string(BranchLabel b) {
  switch (b) {
    case BranchLabel::delocalized: return "delocalized";
    case BranchLabel::antiferro: return "antiferro";
    case BranchLabel::ionic_left: return "ionic_left";
    case BranchLabel::ionic_right: return "ionic_right";
    case BranchLabel::unclassified: return "unclassified";
  }
  return "unclassified";
}

BranchLabel branch_label_from_string(const std::string& s) {
  for (BranchLabel b : {BranchLabel::delocalized, BranchLabel::antiferro, BranchLabel::ionic_left,
                        BranchLabel::ionic_right, BranchLabel::unclassified})
    if (s == to_string(b)) return b;
  throw std::invalid_argument("unknown branch label '" + s + "'");
}

const char* to_string(SweepParameter p) { return p == SweepParameter::alpha ? "alpha" : "R"; }

SweepParameter sweep_parameter_from_string(const std::string& s) {
  if (s == "alpha") return SweepParameter::alpha;
  if (s == "R") return SweepParameter::R;
  throw std::invalid_argument("unknown sweep parameter '" + s + "' (expected alpha or R)");
}

BranchLabel classify_branch(const StateMetrics& m, const BranchTolerances& tol) {
  if (std::abs(m.mean()) > tol.d_tol) return m.mean() < 0 ? BranchLabel::ionic_left : BranchLabel::ionic_right;
  if (m.symmetry < tol.s_tol) return BranchLabel::delocalized;
  if (std::abs(m.localization()) > tol.d_tol) return BranchLabel::antiferro;
  return BranchLabel::unclassified;
}

void SweepConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("sweep: grid is empty");
  if (inits.empty()) throw std::invalid_argument("sweep: no inits given");
  bool up = true, down = true;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    up = up && grid[i] > grid[i - 1];
    down = down && grid[i] < grid[i - 1];
  }
  if (grid.size() > 1 && !up && !down) throw std::invalid_argument("sweep: grid must be strictly monotone");
  for (double v : grid) {
    if (!std::isfinite(v)) throw std::invalid_argument("sweep: grid values must be finite");
    if (parameter == SweepParameter::R && !(v > 0)) throw std::invalid_argument("sweep: R values must be positive");
    if (parameter == SweepParameter::alpha && !(v >= 0)) throw std::invalid_argument("sweep: alpha must be >= 0");
  }
  if (parameter == SweepParameter::alpha && !(fixed_value > 0)) throw std::invalid_argument("sweep: R must be positive");
  if (parameter == SweepParameter::R && !(fixed_value >= 0)) throw std::invalid_argument("sweep: alpha must be >= 0");
  discretization.validate();
  scf.validate();
  if (compute_hessian) {
    hessian.validate();
    if (hessian_k < 1) throw std::invalid_argument("sweep: hessian_k must be >= 1");
    if (!(tol_eig > 0)) throw std::invalid_argument("sweep: tol_eig must be positive");
  }
  if (!(tolerances.s_tol > 0 && tolerances.d_tol > 0)) throw std::invalid_argument("sweep: tolerances must be positive");
}

double state_distance(const Model& model, const OrbitalState& a, const OrbitalState& b) {
  auto orbital = [&](const NodalField& x, const NodalField& y) {
    const double sgn = mass_inner(model.S(), x, y) < 0 ? -1.0 : 1.0;
    Vector d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - sgn * y[i];
    return mass_inner(model.S(), d, d);
  };
  const double same = orbital(a.c_plus, b.c_plus) + orbital(a.c_minus, b.c_minus);
  const double swapped = orbital(a.c_plus, b.c_minus) + orbital(a.c_minus, b.c_plus);
  return std::sqrt(std::min(same, swapped));
}

namespace {

void fill_point(BranchPoint& p, const Model& model, const OrbitalState& s, const BranchTolerances& tol) {
  const StateMetrics m = state_metrics(model, s);
  p.s = m.symmetry;
  p.d = m.localization();
  p.mean = m.mean();
  p.label = classify_branch(m, tol);
  p.energy = total_energy(model, s);
}

}  // namespace

std::vector<BranchPoint> sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<BranchPoint> out;
  std::unique_ptr<Model> model, prev_model;
  const std::size_t ni = cfg.inits.size();
  std::vector<std::optional<OrbitalState>> chain(ni);
  std::vector<const Model*> chain_model(ni, nullptr);

  for (double value : cfg.grid) {
    const double R = cfg.parameter == SweepParameter::R ? value : cfg.fixed_value;
    const double alpha = cfg.parameter == SweepParameter::alpha ? value : cfg.fixed_value;
    if (!model || model->nuclei().R != R) {
      prev_model = std::move(model);
      model = make_model(cfg.discretization, R);
    }
    std::vector<BranchPoint> here;
    std::vector<OrbitalState> here_states;
    for (std::size_t k = 0; k < ni; ++k) {
      const InitKind init = cfg.inits[k];
      BranchPoint p;
      p.alpha = alpha;
      p.R = R;
      p.bond_length = 2 * R;
      p.init = init;
      OrbitalState start;
      if (chain[k]) {
        start = chain_model[k] == model.get() ? *chain[k] : transfer_state(chain_model[k]->mesh(), *chain[k], *model);
        start.alpha = alpha;
        p.warm_started = true;
      } else {
        start = initial_guess(*model, init, alpha, cfg.scf.gaussian_zeta);
      }
      SCFConfig scf = cfg.scf;
      scf.reflection_symmetric = cfg.symmetric_delocalized && init == InitKind::delocalized;
      OrbitalState result;
      try {
        auto [s, rep] = scf_solve(*model, std::move(start), scf);
        p.converged = rep.converged;
        p.scf_iterations = rep.iterations;
        if (!rep.converged) p.error = rep.message;
        result = std::move(s);
        fill_point(p, *model, result, cfg.tolerances);
      } catch (const SolverError& e) {
        p.error = e.what();
      }
      if (p.converged) {
        chain[k] = result;
        chain_model[k] = model.get();
      }
      if (p.converged && cfg.compute_hessian) {
        p.hessian.computed = true;
        try {
          const auto rep = smallest_eigenpairs(*model, result, cfg.hessian_k, cfg.tol_eig, cfg.hessian);
          p.hessian.converged = rep.converged;
          p.hessian.eigenvalues = rep.eigenvalues;
          p.hessian.n_negative = rep.n_negative;
          p.hessian.classification = rep.classification();
        } catch (const std::exception& e) {
          p.hessian.error = e.what();
          p.hessian.classification = "inconclusive";
        }
      }
      // merge with an earlier init that reached the same state
      bool merged = false;
      if (p.converged) {
        for (std::size_t j = 0; j < here.size(); ++j) {
          if (!here[j].converged) continue;
          if (state_distance(*model, here_states[j], result) < cfg.dedup_distance) {
            here[j].merged.push_back(init);
            merged = true;
            break;
          }
        }
      }
      if (merged) {
        // a collapsed init restarts from its own guess, so it can pick its branch up again later
        chain[k].reset();
        chain_model[k] = nullptr;
        continue;
      }
      if (cfg.keep_states && p.converged) p.state = result;
      here.push_back(std::move(p));
      here_states.push_back(std::move(result));
    }
    // chains whose point failed still live on the old mesh: move them before it is released
    for (std::size_t k = 0; k < ni; ++k) {
      if (chain[k] && chain_model[k] != model.get()) {
        chain[k] = transfer_state(chain_model[k]->mesh(), *chain[k], *model);
        chain_model[k] = model.get();
      }
    }
    for (auto& p : here) out.push_back(std::move(p));
    prev_model.reset();
  }
  return out;
}

std::optional<Bifurcation> detect_bifurcation(const std::vector<BranchPoint>& points, SweepParameter parameter,
                                              double tol_energy) {
  auto key = [&](const BranchPoint& p) { return parameter == SweepParameter::R ? p.R : p.alpha; };
  std::vector<const BranchPoint*> deloc, af;
  for (const auto& p : points) {
    if (!p.converged) continue;
    if (p.label == BranchLabel::delocalized) deloc.push_back(&p);
    if (p.label == BranchLabel::antiferro) af.push_back(&p);
  }
  auto by_key = [&](const BranchPoint* a, const BranchPoint* b) { return key(*a) < key(*b); };
  std::sort(deloc.begin(), deloc.end(), by_key);
  std::sort(af.begin(), af.end(), by_key);

  std::vector<const BranchPoint*> eig;
  for (const auto* p : deloc)
    if (p->hessian.computed && !p->hessian.eigenvalues.empty()) eig.push_back(p);
  for (std::size_t i = 1; i < eig.size(); ++i) {
    const double l0 = eig[i - 1]->hessian.eigenvalues.front(), l1 = eig[i]->hessian.eigenvalues.front();
    if (l0 > 0 && l1 < 0) {
      const double p0 = key(*eig[i - 1]), p1 = key(*eig[i]);
      return Bifurcation{p0 + (p1 - p0) * l0 / (l0 - l1), "eigenvalue"};
    }
  }

  // energy fallback on grid values present on both branches
  std::vector<std::pair<double, double>> gap;  // (parameter, E_deloc - E_af)
  for (const auto* d : deloc)
    for (const auto* a : af)
      if (key(*a) == key(*d)) gap.emplace_back(key(*d), d->energy.total() - a->energy.total());
  double prev_key = 0;
  bool have_prev = false;
  for (const auto* d : deloc) {
    const double k = key(*d);
    auto it = std::find_if(gap.begin(), gap.end(), [&](const auto& g) { return g.first == k; });
    const bool split = it != gap.end() && it->second > 10 * tol_energy;
    if (split) {
      if (!have_prev) return std::nullopt;  // broken already at the first sample: crossing not bracketed
      return Bifurcation{0.5 * (prev_key + k), "energy"};
    }
    prev_key = k;
    have_prev = true;
  }
  return std::nullopt;
}

PhaseDiagram phase_diagram(const std::vector<double>& alpha_grid, const std::vector<double>& R_grid,
                           const SweepConfig& base) {
  if (alpha_grid.empty() || R_grid.empty()) throw std::invalid_argument("phase diagram: empty grid");
  PhaseDiagram pd;
  pd.alpha_grid = alpha_grid;
  pd.R_grid = R_grid;
  for (double alpha : alpha_grid) {
    SweepConfig cfg = base;
    cfg.parameter = SweepParameter::R;
    cfg.fixed_value = alpha;
    cfg.grid = R_grid;
    cfg.inits = {InitKind::delocalized, InitKind::antiferro};
    cfg.keep_states = false;
    auto points = sweep(cfg);
    PhaseBoundaryPoint b;
    b.alpha = alpha;
    for (const auto& p : points) b.failed_points += !p.converged;
    if (auto bif = detect_bifurcation(points, SweepParameter::R, cfg.scf.tol_energy)) {
      b.critical_R = bif->value;
      b.method = bif->method;
    } else {
      b.method = "open";
    }
    pd.boundary.push_back(b);
    for (auto& p : points) pd.samples.push_back(std::move(p));
  }
  return pd;
}

namespace {

std::ostream& fmt(std::ostream& os) { return os << std::setprecision(12); }

}  // namespace

void write_branch_csv(std::ostream& os, const std::vector<BranchPoint>& points) {
  fmt(os);
  os << "alpha,R,bond_length,branch,E_total,E_kinetic,E_nuclear,E_hartree,E_exchange,s,d,n_negative_eigs,converged\n";
  for (const auto& p : points) {
    os << p.alpha << ',' << p.R << ',' << p.bond_length << ',' << to_string(p.label) << ',' << p.energy.total() << ','
       << p.energy.kinetic << ',' << p.energy.nuclear << ',' << p.energy.hartree << ',' << p.energy.exchange << ','
       << p.s << ',' << p.d << ',';
    if (p.hessian.computed && p.hessian.error.empty())
      os << p.hessian.n_negative;
    else
      os << "NA";
    os << ',' << (p.converged ? "true" : "false") << '\n';
  }
}

std::string branch_points_json(const std::vector<BranchPoint>& points) {
  json arr = json::array();
  for (const auto& p : points) {
    json j;
    j["alpha"] = p.alpha;
    j["R"] = p.R;
    j["bond_length"] = p.bond_length;
    j["init"] = to_string(p.init);
    j["branch"] = to_string(p.label);
    j["energy"] = {{"total", p.energy.total()},
                   {"kinetic", p.energy.kinetic},
                   {"nuclear", p.energy.nuclear},
                   {"hartree", p.energy.hartree},
                   {"exchange", p.energy.exchange}};
    j["s"] = p.s;
    j["d"] = p.d;
    j["mean_centroid"] = p.mean;
    j["converged"] = p.converged;
    j["warm_started"] = p.warm_started;
    j["scf_iterations"] = p.scf_iterations;
    json merged = json::array();
    for (InitKind k : p.merged) merged.push_back(to_string(k));
    j["merged_inits"] = merged;
    if (!p.error.empty()) j["error"] = p.error;
    if (p.hessian.computed) {
      j["hessian"] = {{"converged", p.hessian.converged},
                      {"eigenvalues", p.hessian.eigenvalues},
                      {"n_negative", p.hessian.n_negative},
                      {"classification", p.hessian.classification}};
      if (!p.hessian.error.empty()) j["hessian"]["error"] = p.hessian.error;
    }
    arr.push_back(j);
  }
  return arr.dump(2);
}

void write_phase_csv(std::ostream& os, const PhaseDiagram& pd) {
  fmt(os);
  os << "alpha,critical_R,critical_bond_length,method,open\n";
  for (const auto& b : pd.boundary) {
    os << b.alpha << ',';
    if (b.critical_R)
      os << *b.critical_R << ',' << b.critical_bond_length();
    else
      os << "NA,NA";
    os << ',' << b.method << ',' << (b.critical_R ? "false" : "true") << '\n';
  }
}

std::string phase_boundary_json(const PhaseDiagram& pd) {
  json j;
  j["alpha_grid"] = pd.alpha_grid;
  j["R_grid"] = pd.R_grid;
  json line = json::array();
  for (const auto& b : pd.boundary) {
    json p;
    p["alpha"] = b.alpha;
    if (b.critical_R) {
      p["critical_R"] = *b.critical_R;
      p["critical_bond_length"] = b.critical_bond_length();
    } else {
      p["critical_R"] = nullptr;
      p["critical_bond_length"] = nullptr;
    }
    p["method"] = b.method;
    p["open"] = !b.critical_R.has_value();
    p["failed_points"] = b.failed_points;
    line.push_back(p);
  }
  j["boundary"] = line;
  return j.dump(2);
}

}  // namespace h2dft
