#include "h2dft/scf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace h2dft {

const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::delocalized: return "delocalized";
    case InitKind::antiferro: return "antiferro";
    case InitKind::ionic_left: return "ionic_left";
    case InitKind::ionic_right: return "ionic_right";
  }
  return "?";
}

InitKind init_kind_from_string(const std::string& s) {
  if (s == "delocalized") return InitKind::delocalized;
  if (s == "antiferro") return InitKind::antiferro;
  if (s == "ionic_left") return InitKind::ionic_left;
  if (s == "ionic_right") return InitKind::ionic_right;
  throw std::invalid_argument("unknown init kind '" + s + "'");
}

const char* to_string(EnergyUpdate u) {
  return u == EnergyUpdate::greens_correction ? "greens_correction" : "rayleigh";
}

EnergyUpdate energy_update_from_string(const std::string& s) {
  if (s == "greens_correction") return EnergyUpdate::greens_correction;
  if (s == "rayleigh") return EnergyUpdate::rayleigh;
  throw std::invalid_argument("unknown energy update '" + s + "'");
}

void SCFConfig::validate() const {
  if (!(tol_energy > 0)) throw std::invalid_argument("scf: tol_energy must be positive");
  if (max_iterations < 1) throw std::invalid_argument("scf: max_iterations must be positive");
  if (!(mixing > 0 && mixing <= 1)) throw std::invalid_argument("scf: mixing must lie in (0, 1]");
  if (!(gaussian_zeta > 0)) throw std::invalid_argument("scf: gaussian_zeta must be positive");
  if (!(eps_floor > 0)) throw std::invalid_argument("scf: eps_floor must be positive");
  helmholtz.validate();
}

Model::Model(std::shared_ptr<const Mesh> mesh, NuclearPotentialSpec nuclei, HartreeConfig hartree)
    : mesh_(std::move(mesh)), space_(mesh_), nuclei_(nuclei) {
  nuclei_.validate();
  T_ = assemble_stiffness(space_);
  S_ = assemble_mass(space_);
  v_nuc_ = nuclear_field(*mesh_, nuclei_);
  hartree_ = std::make_unique<HartreeSolver>(space_, T_, S_, hartree);
  auto h = std::make_shared<const MultigridHierarchy>(*mesh_, space_.boundary_mask());
  shifted_ = std::make_unique<ShiftedLevels>(h, T_, S_);
}

void DiscretizationConfig::validate() const {
  mesh_config(1.0).validate();
  if (!(delta >= 0)) throw std::invalid_argument("discretization: delta must be >= 0");
  hartree.solver.validate();
}

MeshConfig DiscretizationConfig::mesh_config(double R) const {
  MeshConfig m = MeshConfig::for_molecule(R, local_refine_rounds, global_refine_rounds);
  m.half_extent = half_extent;
  m.initial_cells_per_axis = initial_cells_per_axis;
  m.h_min_floor = h_min_floor;
  return m;
}

std::unique_ptr<Model> make_model(const DiscretizationConfig& cfg, double R) {
  cfg.validate();
  auto mesh = std::make_shared<const Mesh>(build_molecule_mesh(cfg.mesh_config(R)));
  const double delta = cfg.delta > 0 ? cfg.delta : default_nuclear_delta(*mesh, R);
  return std::make_unique<Model>(mesh, NuclearPotentialSpec{R, delta}, cfg.hartree);
}

Vector Model::density_load(const OrbitalState& s) const {
  Vector r = space_.product_load(s.c_plus, s.c_plus);
  const Vector rm = space_.product_load(s.c_minus, s.c_minus);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += rm[i];
  return r;
}

NodalField Model::hartree_potential(std::span<const double> load, std::span<const double> guess) const {
  return hartree_->solve_load(load, guess);
}

SolveReport Model::helmholtz_solve(double shift, std::span<const double> b, std::span<double> x,
                                   const SolverConfig& cfg) const {
  const auto mask = fixed();
  const SparseOperator A = T_.combine(1.0, S_, -shift).constrained(mask);
  Vector rhs(b.begin(), b.end());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    if (mask[i]) {
      rhs[i] = 0;
      x[i] = 0;
    }
  }
  switch (cfg.preconditioner) {
    case PreconditionerKind::none: return cg_solve(A, rhs, x, cfg);
    case PreconditionerKind::diagonal: return cg_solve(A, rhs, x, cfg, jacobi_preconditioner(A));
    case PreconditionerKind::multigrid: {
      const Multigrid mg = shifted_->multigrid(shift);
      return cg_solve(A, rhs, x, cfg, mg.as_preconditioner());
    }
  }
  throw std::logic_error("unreachable");
}

double s_norm(const Model& model, std::span<const double> c) { return std::sqrt(mass_inner(model.S(), c, c)); }

void normalize(const Model& model, NodalField& c) {
  const auto fixed = model.fixed();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (fixed[i]) c[i] = 0;
  }
  const double nrm = s_norm(model, c);
  if (!(nrm > 0)) throw std::invalid_argument("cannot normalize a zero orbital");
  kernels::scale(1.0 / nrm, c);
}

Vector effective_rhs(const Model& model, std::span<const double> c, double alpha, std::span<const double> v_ee) {
  const int n = model.size();
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = model.v_nuc()[i] + v_ee[i];
  Vector f = model.space().product_load(w, c);
  const auto& l = model.lumped();
  const auto fixed = model.fixed();
  for (int i = 0; i < n; ++i) {
    f[i] = fixed[i] ? 0.0 : -f[i] + (4.0 / 3.0) * alpha * l[i] * std::cbrt(c[i] * c[i]) * c[i];
    if (std::isnan(f[i])) throw std::runtime_error("effective_rhs: NaN in the load");
  }
  return f;
}

std::pair<Vector, Vector> effective_rhs(const Model& model, const OrbitalState& s, std::span<const double> v_ee) {
  return {effective_rhs(model, s.c_plus, s.alpha, v_ee), effective_rhs(model, s.c_minus, s.alpha, v_ee)};
}

HelmholtzResult helmholtz_update(const Model& model, double eps, std::span<const double> f,
                                 std::span<const double> guess, const SolverConfig& cfg) {
  if (!(eps < 0)) throw std::invalid_argument("helmholtz_update: shift must be negative (clamp first)");
  HelmholtzResult out;
  out.c.assign(f.size(), 0.0);
  if (!guess.empty()) std::copy(guess.begin(), guess.end(), out.c.begin());
  out.report = model.helmholtz_solve(eps, f, out.c, cfg);
  if (!out.report.converged) throw SolverError("helmholtz_update: " + out.report.message, out.report);
  return out;
}

double energy_correction(const SparseOperator& S, std::span<const double> phi, std::span<const double> phi_tilde,
                         std::span<const double> f) {
  const double denom = mass_inner(S, phi_tilde, phi_tilde);
  if (!(denom >= 1e-14)) throw std::invalid_argument("energy_correction: degenerate Helmholtz update");
  return (kernels::dot(f, phi) - kernels::dot(f, phi_tilde)) / denom;
}

EnergyBreakdown total_energy(const Model& model, const OrbitalState& s, std::span<const double> v_ee) {
  EnergyBreakdown e;
  const auto& l = model.lumped();
  for (int spin = 0; spin < 2; ++spin) {
    const auto& c = s.c(spin);
    e.kinetic += mass_inner(model.T(), c, c);
    e.nuclear += kernels::dot(c, model.space().product_load(model.v_nuc(), c));
    double x = 0;
    for (std::size_t i = 0; i < c.size(); ++i) x += l[i] * std::pow(std::abs(c[i]), 8.0 / 3.0);
    e.exchange -= s.alpha * x;
  }
  e.hartree = 0.5 * kernels::dot(model.density_load(s), v_ee);
  return e;
}

EnergyBreakdown total_energy(const Model& model, const OrbitalState& s) {
  const auto V = model.hartree_potential(model.density_load(s));
  return total_energy(model, s, V);
}

Vector energy_gradient(const Model& model, const OrbitalState& s, int spin, std::span<const double> v_ee) {
  const auto& c = s.c(spin);
  const Vector f = effective_rhs(model, c, s.alpha, v_ee);
  Vector g = model.T().apply(c);
  const auto fixed = model.fixed();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = fixed[i] ? 0.0 : 2 * (g[i] - f[i]);
  return g;
}

double euler_lagrange_residual(const Model& model, std::span<const double> c, double eps, std::span<const double> f) {
  const Vector Tc = model.T().apply(c);
  const Vector Sc = model.S().apply(c);
  const auto& l = model.lumped();
  const auto fixed = model.fixed();
  double sum = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (fixed[i]) continue;
    const double r = Tc[i] - eps * Sc[i] - f[i];
    sum += r * r / l[i];
  }
  return std::sqrt(sum);
}

double rayleigh_energy(const Model& model, std::span<const double> c, std::span<const double> f) {
  return mass_inner(model.T(), c, c) - kernels::dot(c, f);
}

namespace {

Vector gaussian(const Mesh& mesh, const Vec3& center, double zeta) {
  return interpolate(mesh, [&](const Vec3& x) { return std::exp(-zeta * dot(x - center, x - center)); });
}

// Rayleigh quotient of the exchange-free Hamiltonian with the starting density.
void initial_energies(const Model& model, OrbitalState& s) {
  const auto V = model.hartree_potential(model.density_load(s));
  for (int spin = 0; spin < 2; ++spin) {
    const Vector f = effective_rhs(model, s.c(spin), 0.0, V);
    s.eps(spin) = rayleigh_energy(model, s.c(spin), f);
  }
}

}  // namespace

OrbitalState initial_guess(const Model& model, InitKind kind, double alpha, double zeta) {
  if (!(zeta > 0)) throw std::invalid_argument("initial_guess: zeta must be positive");
  const double R = model.nuclei().R;
  const Vector gp = gaussian(model.mesh(), {R, 0, 0}, zeta);
  const Vector gm = gaussian(model.mesh(), {-R, 0, 0}, zeta);
  OrbitalState s;
  s.alpha = alpha;
  s.R = R;
  switch (kind) {
    case InitKind::delocalized: {
      Vector sum(gp.size());
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = gp[i] + gm[i];
      s.c_plus = sum;
      s.c_minus = sum;
      break;
    }
    case InitKind::antiferro:
      s.c_plus = gp;
      s.c_minus = gm;
      break;
    case InitKind::ionic_left:  // both electrons on the nucleus at -R e1
      s.c_plus = gm;
      s.c_minus = gm;
      break;
    case InitKind::ionic_right:
      s.c_plus = gp;
      s.c_minus = gp;
      break;
  }
  normalize(model, s.c_plus);
  normalize(model, s.c_minus);
  initial_energies(model, s);
  return s;
}

OrbitalState custom_guess(const Model& model, NodalField plus, NodalField minus, double alpha) {
  if (static_cast<int>(plus.size()) != model.size() || static_cast<int>(minus.size()) != model.size()) {
    throw std::invalid_argument("custom_guess: field size does not match the mesh");
  }
  OrbitalState s;
  s.alpha = alpha;
  s.R = model.nuclei().R;
  s.c_plus = std::move(plus);
  s.c_minus = std::move(minus);
  normalize(model, s.c_plus);
  normalize(model, s.c_minus);
  initial_energies(model, s);
  return s;
}

std::pair<OrbitalState, SCFReport> scf_solve(const Model& model, OrbitalState s, const SCFConfig& cfg) {
  cfg.validate();
  SCFReport rep;
  const int n = model.size();
  if (static_cast<int>(s.c_plus.size()) != n || static_cast<int>(s.c_minus.size()) != n) {
    throw std::invalid_argument("scf_solve: state does not live on this mesh");
  }
  std::vector<int> perm;
  if (cfg.reflection_symmetric) perm = reflection_permutation(model.mesh());
  auto mirror_average = [&](NodalField& c) {
    if (perm.empty()) return;
    const NodalField old = c;
    for (int i = 0; i < n; ++i) c[i] = 0.5 * (old[i] + old[perm[i]]);
    normalize(model, c);
  };
  normalize(model, s.c_plus);
  normalize(model, s.c_minus);
  mirror_average(s.c_plus);
  mirror_average(s.c_minus);
  auto clamp = [&](int it, int spin) {
    if (s.eps(spin) > -cfg.eps_floor) {
      rep.clamps.push_back({it, spin, s.eps(spin)});
      s.eps(spin) = -cfg.eps_floor;
    }
  };
  clamp(0, 0);
  clamp(0, 1);

  Vector V = model.hartree_potential(model.density_load(s));
  Vector V_mix = V;
  double E = total_energy(model, s, V).total();
  rep.energy_history.push_back(E);

  OrbitalState best = s;
  double best_res = INFINITY;
  int last_sign = 0;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    rep.iterations = it;
    OrbitalState next = s;
    for (int spin = 0; spin < 2; ++spin) {
      const auto& c = s.c(spin);
      const Vector f = effective_rhs(model, c, s.alpha, V_mix);
      const auto upd = helmholtz_update(model, s.eps(spin), f, c, cfg.helmholtz);
      NodalField cn = upd.c;
      normalize(model, cn);
      mirror_average(cn);
      if (cfg.energy_update == EnergyUpdate::greens_correction) {
        next.eps(spin) = s.eps(spin) + energy_correction(model.S(), c, upd.c, f);
      } else {
        next.eps(spin) = rayleigh_energy(model, cn, effective_rhs(model, cn, s.alpha, V_mix));
      }
      next.c(spin) = std::move(cn);
    }
    s = std::move(next);
    clamp(it, 0);
    clamp(it, 1);

    V = model.hartree_potential(model.density_load(s), V);
    for (int i = 0; i < n; ++i) V_mix[i] = cfg.mixing * V[i] + (1 - cfg.mixing) * V_mix[i];

    const double E_new = total_energy(model, s, V).total();
    rep.energy_history.push_back(E_new);
    const double dE = E_new - E;
    E = E_new;
    const int sign = dE > 0 ? 1 : (dE < 0 ? -1 : 0);
    if (sign != 0 && last_sign != 0 && sign != last_sign) ++rep.sign_alternations;
    if (sign != 0) last_sign = sign;

    const auto [fp, fm] = effective_rhs(model, s, V);
    rep.residual_plus = euler_lagrange_residual(model, s.c_plus, s.eps_plus, fp);
    rep.residual_minus = euler_lagrange_residual(model, s.c_minus, s.eps_minus, fm);
    const double res = std::max(rep.residual_plus, rep.residual_minus);
    if (res < best_res) {
      best_res = res;
      best = s;
    }
    // the projected energy gradient is twice the Euler-Lagrange residual
    if (std::abs(dE) < cfg.tol_energy && 2 * res < 10 * cfg.tol_energy) {
      rep.converged = true;
      return {std::move(s), std::move(rep)};
    }
  }
  std::ostringstream msg;
  msg << "scf: no convergence after " << cfg.max_iterations << " iterations (best residual " << best_res << ")";
  if (rep.sign_alternations > 10) msg << "; energy differences alternated in sign " << rep.sign_alternations
                                      << " times, consider reducing the mixing parameter";
  rep.message = msg.str();
  return {std::move(best), std::move(rep)};
}

Vec3 orbital_centroid(const Model& model, std::span<const double> c) {
  const Vector r = model.space().product_load(c, c);
  Vec3 m;
  double q = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    m = m + model.mesh().vertices[i] * r[i];
    q += r[i];
  }
  return m * (1.0 / q);
}

StateMetrics state_metrics(const Model& model, const OrbitalState& s) {
  StateMetrics m;
  const double sign = mass_inner(model.S(), s.c_plus, s.c_minus) < 0 ? -1.0 : 1.0;
  Vector d(s.c_plus.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.c_plus[i] - sign * s.c_minus[i];
  m.symmetry = s_norm(model, d);
  m.centroid_plus = orbital_centroid(model, s.c_plus).x;
  m.centroid_minus = orbital_centroid(model, s.c_minus).x;
  return m;
}

OrbitalState transfer_state(const Mesh& from, const OrbitalState& s, const Model& to) {
  const PointLocator loc(from);
  const double scale = s.R / to.nuclei().R;
  OrbitalState out = s;
  out.R = to.nuclei().R;
  for (int spin = 0; spin < 2; ++spin) {
    NodalField c(to.size());
    for (int i = 0; i < to.size(); ++i) {
      const Vec3& x = to.mesh().vertices[i];
      c[i] = loc.evaluate(s.c(spin), {x.x * scale, x.y, x.z});
    }
    normalize(to, c);
    out.c(spin) = std::move(c);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'H', '2', 'D', 'F', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  os.write(kMagic, sizeof kMagic);
  put(os, kCheckpointVersion);
  put(os, ck.mesh_hash);
  put(os, static_cast<std::uint64_t>(ck.state.c_plus.size()));
  for (double v : {ck.state.alpha, ck.state.R, ck.delta, ck.state.eps_plus, ck.state.eps_minus}) put(os, v);
  os.write(reinterpret_cast<const char*>(ck.state.c_plus.data()), sizeof(double) * ck.state.c_plus.size());
  os.write(reinterpret_cast<const char*>(ck.state.c_minus.data()), sizeof(double) * ck.state.c_minus.size());
  put(os, static_cast<std::uint64_t>(ck.config.size()));
  os.write(ck.config.data(), static_cast<std::streamsize>(ck.config.size()));
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("checkpoint: bad magic");
  if (get<std::uint32_t>(is) != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ck;
  ck.mesh_hash = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  ck.state.alpha = get<double>(is);
  ck.state.R = get<double>(is);
  ck.delta = get<double>(is);
  ck.state.eps_plus = get<double>(is);
  ck.state.eps_minus = get<double>(is);
  ck.state.c_plus.resize(n);
  ck.state.c_minus.resize(n);
  is.read(reinterpret_cast<char*>(ck.state.c_plus.data()), static_cast<std::streamsize>(sizeof(double) * n));
  is.read(reinterpret_cast<char*>(ck.state.c_minus.data()), static_cast<std::streamsize>(sizeof(double) * n));
  const auto len = get<std::uint64_t>(is);
  ck.config.resize(len);
  is.read(ck.config.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return ck;
}

}  // namespace h2dft
