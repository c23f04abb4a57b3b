#include "h2dft/hessian.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace h2dft {

const char* to_string(HessianVariant v) { return v == HessianVariant::full ? "full" : "appendix"; }

HessianVariant hessian_variant_from_string(const std::string& s) {
  if (s == "full") return HessianVariant::full;
  if (s == "appendix") return HessianVariant::appendix;
  throw std::invalid_argument("unknown Hessian variant '" + s + "'");
}

void HessianConfig::validate() const {
  poisson.validate();
  if (!(max_state_residual > 0)) throw std::invalid_argument("hessian: max_state_residual must be positive");
  if (max_iterations < 1) throw std::invalid_argument("hessian: max_iterations must be >= 1");
  if (guard_vectors < 0) throw std::invalid_argument("hessian: guard_vectors must be >= 0");
}

std::string HessianReport::classification() const {
  switch (kind) {
    case StationaryKind::local_min: return "local_min";
    case StationaryKind::saddle: return "saddle(" + std::to_string(n_negative) + ")";
    case StationaryKind::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

StationaryKind classify(const std::vector<double>& ev, double tol, bool converged, int* n_negative) {
  int neg = 0, near_zero = 0, pos = 0;
  for (double l : ev) {
    if (l < -tol)
      ++neg;
    else if (l > tol)
      ++pos;
    else
      ++near_zero;
  }
  if (n_negative) *n_negative = neg;
  if (!converged || ev.empty() || near_zero > 0) return StationaryKind::inconclusive;
  if (neg == 0) return StationaryKind::local_min;
  // with every computed eigenvalue negative the count is only a lower bound
  return pos > 0 ? StationaryKind::saddle : StationaryKind::inconclusive;
}

HessianOperator::HessianOperator(const Model& model, const OrbitalState& state, HessianConfig cfg)
    : model_(model), state_(state), cfg_(cfg), n_(model.size()) {
  cfg_.validate();
  if (static_cast<int>(state.c_plus.size()) != n_ || static_cast<int>(state.c_minus.size()) != n_)
    throw std::invalid_argument("hessian: state does not match the mesh");
  const auto& space = model.space();
  const auto& hartree = model.hartree();
  Vector V[2];
  if (cfg_.variant == HessianVariant::full) {
    V[0] = hartree.solve_load(model.density_load(state), cfg_.poisson);
    V[1] = V[0];
  } else {
    // diagonal block of spin s sees only the other spin's density
    V[0] = hartree.solve_load(space.product_load(state.c_minus, state.c_minus), cfg_.poisson);
    V[1] = hartree.solve_load(space.product_load(state.c_plus, state.c_plus), cfg_.poisson);
  }
  const Vector Vfull = cfg_.variant == HessianVariant::full
                           ? V[0]
                           : hartree.solve_load(model.density_load(state), cfg_.poisson);
  for (int s = 0; s < 2; ++s) {
    const Vector f = effective_rhs(model, state.c(s), state.alpha, Vfull);
    const double res = euler_lagrange_residual(model, state.c(s), state.eps(s), f);
    if (!(res <= cfg_.max_state_residual))
      throw std::invalid_argument("hessian: state is not converged (residual " + std::to_string(res) + ")");
  }

  const auto& l = model.lumped();
  const auto dpos = model.T().pattern().diagonal_positions();
  for (int s = 0; s < 2; ++s) {
    Vector w(n_);
    for (int i = 0; i < n_; ++i) w[i] = model.v_nuc()[i] + V[s][i];
    SparseOperator D = model.T().combine(1.0, assemble_weighted_mass(space, w), 1.0).combine(1.0, model.S(), -state.eps(s));
    auto vals = D.values();
    const auto& c = state.c(s);
    for (int i = 0; i < n_; ++i) vals[dpos[i]] -= (20.0 / 9.0) * state.alpha * l[i] * std::cbrt(c[i] * c[i]);
    diag_[s] = std::move(D);
    precond_.push_back(model.helmholtz_levels().multigrid(std::min(state.eps(s), -0.05)));
    Sc_[s] = model.S().apply(c);
  }
}

void HessianOperator::apply(std::span<const double> w, std::span<double> r) const {
  if (static_cast<int>(w.size()) != 2 * n_ || static_cast<int>(r.size()) != 2 * n_)
    throw std::invalid_argument("hessian: vector size mismatch");
  const auto fixed = model_.fixed();
  const auto& space = model_.space();
  Vector ws[2] = {Vector(w.begin(), w.begin() + n_), Vector(w.begin() + n_, w.end())};
  for (auto& v : ws)
    for (int i = 0; i < n_; ++i)
      if (fixed[i]) v[i] = 0;

  Vector U[2];
  const Vector b0 = space.product_load(state_.c_plus, ws[0]);
  const Vector b1 = space.product_load(state_.c_minus, ws[1]);
  if (cfg_.variant == HessianVariant::full) {
    Vector load = b0;
    kernels::axpy(1.0, b1, load);
    U[0] = model_.hartree().solve_load(load, cfg_.poisson);
    U[1] = U[0];
    solves_ += 1;
  } else {
    U[0] = model_.hartree().solve_load(b1, cfg_.poisson);
    U[1] = model_.hartree().solve_load(b0, cfg_.poisson);
    solves_ += 2;
  }
  for (int s = 0; s < 2; ++s) {
    std::span<double> out = r.subspan(s * n_, n_);
    diag_[s].apply(ws[s], out);
    const Vector coupling = space.product_load(state_.c(s), U[s]);
    for (int i = 0; i < n_; ++i) out[i] = fixed[i] ? 0.0 : out[i] + 2 * coupling[i];
  }
}

Vector HessianOperator::apply(std::span<const double> w) const {
  Vector r(w.size());
  apply(w, r);
  return r;
}

void HessianOperator::project_tangent(std::span<double> w) const {
  for (int s = 0; s < 2; ++s) {
    std::span<double> ws = w.subspan(s * n_, n_);
    const auto& c = state_.c(s);
    const double a = mass_inner(model_.S(), c, ws);
    kernels::axpy(-a, c, ws);
  }
}

double HessianOperator::s_inner(std::span<const double> u, std::span<const double> v) const {
  return mass_inner(model_.S(), u.first(n_), v.first(n_)) + mass_inner(model_.S(), u.subspan(n_), v.subspan(n_));
}

void HessianOperator::apply_mass(std::span<const double> w, std::span<double> out) const {
  model_.S().apply(w.first(n_), out.first(n_));
  model_.S().apply(w.subspan(n_), out.subspan(n_));
}

void HessianOperator::precondition(std::span<const double> r, std::span<double> z) const {
  const auto fixed = model_.fixed();
  for (int s = 0; s < 2; ++s) {
    Vector rs(r.begin() + s * n_, r.begin() + (s + 1) * n_);
    // dual projection r - S c (c^T r) keeps the preconditioner symmetric on the tangent space
    kernels::axpy(-kernels::dot(state_.c(s), rs), Sc_[s], rs);
    for (int i = 0; i < n_; ++i)
      if (fixed[i]) rs[i] = 0;
    precond_[s].apply(rs, z.subspan(s * n_, n_));
    for (int i = 0; i < n_; ++i)
      if (fixed[i]) z[s * n_ + i] = 0;
  }
  project_tangent(z);
}

double HessianOperator::residual_norm(std::span<const double> r) const {
  const auto fixed = model_.fixed();
  const auto& l = model_.lumped();
  double sum = 0;
  for (int s = 0; s < 2; ++s) {
    std::span<const double> rs = r.subspan(s * n_, n_);
    const auto& c = state_.c(s);
    const Vector Sc = model_.S().apply(c);
    const double a = kernels::dot(c, rs);
    for (int i = 0; i < n_; ++i) {
      if (fixed[i]) continue;
      const double t = rs[i] - a * Sc[i];
      sum += t * t / l[i];
    }
  }
  return std::sqrt(sum);
}

std::pair<Vector, Vector> hessian_apply(const Model& model, const OrbitalState& state, std::span<const double> w_plus,
                                        std::span<const double> w_minus, const HessianConfig& cfg) {
  const HessianOperator H(model, state, cfg);
  const int n = model.size();
  if (static_cast<int>(w_plus.size()) != n || static_cast<int>(w_minus.size()) != n)
    throw std::invalid_argument("hessian_apply: vector size mismatch");
  Vector w(w_plus.begin(), w_plus.end());
  w.insert(w.end(), w_minus.begin(), w_minus.end());
  const Vector r = H.apply(w);
  return {Vector(r.begin(), r.begin() + n), Vector(r.begin() + n, r.end())};
}

Vector project_tangent(const Model& model, const OrbitalState& state, std::span<const double> w) {
  const int n = model.size();
  if (static_cast<int>(w.size()) != 2 * n) throw std::invalid_argument("project_tangent: vector size mismatch");
  Vector out(w.begin(), w.end());
  for (int s = 0; s < 2; ++s) {
    std::span<double> ws(out.data() + s * n, n);
    const double a = mass_inner(model.S(), state.c(s), ws);
    kernels::axpy(-a, state.c(s), ws);
  }
  return out;
}

namespace {

using Block = std::vector<Vector>;

/// S-orthonormal basis kept together with its S and H images.
struct Basis {
  Block v, Sv, Hv;
  std::size_t size() const { return v.size(); }
};

/// Makes x S-orthogonal to `b` (two Gram-Schmidt passes) and S-normalizes it.
/// `hx`, when non-empty, receives the same combination. Returns false when
/// less than `drop` of the original S-norm survives.
bool orthonormalize_against(const HessianOperator& H, const Basis& b, Vector& x, Vector* hx, Vector& sx, double drop) {
  H.apply_mass(x, sx);
  const double n0 = std::sqrt(std::max(kernels::dot(x, sx), 0.0));
  if (!(n0 > 0)) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double a = kernels::dot(b.Sv[i], x);
      kernels::axpy(-a, b.v[i], x);
      kernels::axpy(-a, b.Sv[i], sx);
      if (hx) kernels::axpy(-a, b.Hv[i], *hx);
    }
  }
  H.apply_mass(x, sx);
  const double n1 = std::sqrt(std::max(kernels::dot(x, sx), 0.0));
  if (!(n1 > drop * n0)) return false;
  kernels::scale(1.0 / n1, x);
  kernels::scale(1.0 / n1, sx);
  if (hx) kernels::scale(1.0 / n1, *hx);
  return true;
}

}  // namespace

HessianReport smallest_eigenpairs(const Model& model, const OrbitalState& state, int k, double tol_eig,
                                  const HessianConfig& cfg) {
  const HessianOperator H(model, state, cfg);
  return smallest_eigenpairs(H, k, tol_eig, cfg);
}

HessianReport smallest_eigenpairs(const HessianOperator& H, int k, double tol_eig, const HessianConfig& cfg) {
  if (k < 1) throw std::invalid_argument("smallest_eigenpairs: k must be >= 1");
  if (!(tol_eig > 0)) throw std::invalid_argument("smallest_eigenpairs: tol_eig must be positive");
  cfg.validate();
  const int N = H.size();
  const int n = N / 2;
  const int m = k + cfg.guard_vectors;
  const auto fixed = H.model().fixed();
  const OrbitalState& st = H.state();
  constexpr double drop = 1e-8;

  // random start weighted by the orbital envelope, smoothed by one preconditioner pass
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  Basis X;
  while (static_cast<int>(X.size()) < m) {
    Vector raw(N), Sr(N), x(N), sx(N);
    for (int s = 0; s < 2; ++s)
      for (int i = 0; i < n; ++i) {
        const double env = std::abs(st.c_plus[i]) + std::abs(st.c_minus[i]);
        raw[s * n + i] = fixed[i] ? 0.0 : gauss(rng) * env;
      }
    H.project_tangent(raw);
    H.apply_mass(raw, Sr);
    H.precondition(Sr, x);
    if (!orthonormalize_against(H, X, x, nullptr, sx, drop)) continue;
    X.v.push_back(std::move(x));
    X.Sv.push_back(std::move(sx));
    X.Hv.push_back(H.apply(X.v.back()));
  }

  Basis P, W;
  HessianReport rep;
  rep.tol_eig = tol_eig;
  Eigen::VectorXd lambda;
  std::vector<double> res(m, 0.0);
  const bool trace = cfg.trace;

  for (int it = 0;; ++it) {
    // Rayleigh-Ritz on the S-orthonormal span [X, P, W]
    Basis Z = X;
    for (const Basis* b : {&P, &W})
      for (std::size_t i = 0; i < b->size(); ++i) {
        Z.v.push_back(b->v[i]);
        Z.Sv.push_back(b->Sv[i]);
        Z.Hv.push_back(b->Hv[i]);
      }
    const int nz = static_cast<int>(Z.size());
    Eigen::MatrixXd A(nz, nz), G(nz, nz);
    for (int i = 0; i < nz; ++i)
      for (int j = i; j < nz; ++j) {
        A(i, j) = A(j, i) = 0.5 * (kernels::dot(Z.v[i], Z.Hv[j]) + kernels::dot(Z.v[j], Z.Hv[i]));
        G(i, j) = G(j, i) = kernels::dot(Z.v[i], Z.Sv[j]);
      }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(A, G);
    if (ge.info() != Eigen::Success) throw std::runtime_error("smallest_eigenpairs: Rayleigh-Ritz failed");
    const Eigen::MatrixXd Y = ge.eigenvectors().leftCols(m);
    lambda = ge.eigenvalues().head(m);

    const int nx = static_cast<int>(X.size());
    Basis Xn, Pn;
    for (int j = 0; j < m; ++j) {
      Vector x(N, 0.0), sx(N, 0.0), hx(N, 0.0), p(N, 0.0), sp(N, 0.0), hp(N, 0.0);
      for (int i = 0; i < nz; ++i) {
        const double y = Y(i, j);
        kernels::axpy(y, Z.v[i], x);
        kernels::axpy(y, Z.Sv[i], sx);
        kernels::axpy(y, Z.Hv[i], hx);
        if (i >= nx) {
          kernels::axpy(y, Z.v[i], p);
          kernels::axpy(y, Z.Hv[i], hp);
        }
      }
      Xn.v.push_back(std::move(x));
      Xn.Sv.push_back(std::move(sx));
      Xn.Hv.push_back(std::move(hx));
      if (nz > nx) {
        Pn.v.push_back(std::move(p));
        Pn.Hv.push_back(std::move(hp));
      }
    }
    X = std::move(Xn);

    // residuals of the Ritz pairs; preconditioned residuals of unconverged ones
    Block Wraw;
    int wanted_done = 0;
    for (int j = 0; j < m; ++j) {
      Vector r = X.Hv[j];
      kernels::axpy(-lambda(j), X.Sv[j], r);
      res[j] = H.residual_norm(r);
      if (j < k && res[j] < tol_eig) ++wanted_done;
      if (res[j] >= tol_eig) {
        Vector z(N);
        H.precondition(r, z);
        Wraw.push_back(std::move(z));
      }
    }
    rep.iterations = it;
    if (trace) {
      std::fprintf(stderr, "it %d basis %d:", it, nz);
      for (int j = 0; j < m; ++j) std::fprintf(stderr, " %.6f/%.1e", lambda(j), res[j]);
      std::fprintf(stderr, "\n");
    }
    if (wanted_done == k || it == cfg.max_iterations) {
      rep.converged = wanted_done == k;
      break;
    }

    P = Basis{};
    for (std::size_t j = 0; j < Pn.v.size(); ++j) {
      Vector sp(N);
      if (orthonormalize_against(H, X, Pn.v[j], &Pn.Hv[j], sp, drop)) {
        Basis XP = X;
        // keep P S-orthonormal within itself as well
        for (std::size_t i = 0; i < P.size(); ++i) {
          XP.v.push_back(P.v[i]);
          XP.Sv.push_back(P.Sv[i]);
          XP.Hv.push_back(P.Hv[i]);
        }
        if (!orthonormalize_against(H, XP, Pn.v[j], &Pn.Hv[j], sp, drop)) continue;
        P.v.push_back(std::move(Pn.v[j]));
        P.Sv.push_back(std::move(sp));
        P.Hv.push_back(std::move(Pn.Hv[j]));
      }
    }
    W = Basis{};
    Basis XP = X;
    for (std::size_t i = 0; i < P.size(); ++i) {
      XP.v.push_back(P.v[i]);
      XP.Sv.push_back(P.Sv[i]);
      XP.Hv.push_back(P.Hv[i]);
    }
    for (auto& w : Wraw) {
      Vector sw(N);
      if (!orthonormalize_against(H, XP, w, nullptr, sw, drop)) continue;
      XP.v.push_back(w);
      XP.Sv.push_back(sw);
      XP.Hv.push_back(H.apply(w));
      W.v.push_back(std::move(w));
      W.Sv.push_back(std::move(sw));
      W.Hv.push_back(XP.Hv.back());
    }
  }

  for (int j = 0; j < k; ++j) {
    rep.eigenvalues.push_back(lambda(j));
    rep.residuals.push_back(res[j]);
    rep.eigenvectors.push_back(X.v[j]);
  }
  rep.kind = classify(rep.eigenvalues, tol_eig, rep.converged, &rep.n_negative);
  return rep;
}

}  // namespace h2dft
