#include "h2dft/linsolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace h2dft {

const char* to_string(PreconditionerKind k) {
  switch (k) {
    case PreconditionerKind::none: return "none";
    case PreconditionerKind::diagonal: return "diagonal";
    case PreconditionerKind::multigrid: return "multigrid";
  }
  return "?";
}

PreconditionerKind preconditioner_from_string(const std::string& s) {
  if (s == "none") return PreconditionerKind::none;
  if (s == "diagonal") return PreconditionerKind::diagonal;
  if (s == "multigrid") return PreconditionerKind::multigrid;
  throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(rtol > 0 && rtol < 1)) throw std::invalid_argument("solver rtol must lie in (0, 1)");
  if (max_iterations < 1) throw std::invalid_argument("solver max_iterations must be positive");
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double residual_into(const SparseOperator& A, std::span<const double> b, std::span<const double> x,
                     std::span<double> r) {
  A.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return kernels::norm2(r);
}

}  // namespace

SolveReport cg_solve(const SparseOperator& A, std::span<const double> b, std::span<double> x,
                     const SolverConfig& cfg, const PreconditionerFn& M) {
  cfg.validate();
  const std::size_t n = b.size();
  if (x.size() != n || static_cast<std::size_t>(A.size()) != n) throw std::invalid_argument("cg: size mismatch");
  if (!all_finite(b) || !all_finite(x)) throw std::invalid_argument("cg: non-finite right-hand side or guess");

  SolveReport rep;
  const double bnorm = kernels::norm2(b);
  if (bnorm == 0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return rep;
  }
  const double target = cfg.rtol * bnorm;

  Vector r(n), z(n), p(n), Ap(n), best(x.begin(), x.end());
  double rnorm = residual_into(A, b, x, r);
  double best_norm = rnorm;
  if (rnorm <= target) {
    rep.converged = true;
    rep.relative_residual = rnorm / bnorm;
    return rep;
  }
  auto precondition = [&] {
    if (M) {
      M(r, z);
    } else {
      std::copy(r.begin(), r.end(), z.begin());
    }
  };
  precondition();
  p = z;
  double rz = kernels::dot(r, z);

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    rep.iterations = it;
    A.apply(p, Ap);
    const double pAp = kernels::dot(p, Ap);
    if (!(pAp > 0)) {
      rep.breakdown = true;
      rep.relative_residual = rnorm / bnorm;
      std::ostringstream msg;
      msg << "cg: non-positive curvature p^T A p = " << pAp << " at iteration " << it
          << " (operator not SPD)";
      rep.message = msg.str();
      throw SolverError(rep.message, rep);
    }
    const double a = rz / pAp;
    kernels::axpy(a, p, x);
    kernels::axpy(-a, Ap, r);
    rnorm = kernels::norm2(r);
    if (rnorm < best_norm) {
      best_norm = rnorm;
      std::copy(x.begin(), x.end(), best.begin());
    }
    if (rnorm <= target) {
      // confirm against the true residual; restart from it if the recurrence drifted
      rnorm = residual_into(A, b, x, r);
      if (rnorm <= target) {
        rep.converged = true;
        rep.relative_residual = rnorm / bnorm;
        return rep;
      }
      precondition();
      p = z;
      rz = kernels::dot(r, z);
      continue;
    }
    precondition();
    const double rz_new = kernels::dot(r, z);
    if (!(rz_new > 0)) {
      rep.breakdown = true;
      rep.message = "cg: preconditioner is not positive definite";
      rep.relative_residual = rnorm / bnorm;
      throw SolverError(rep.message, rep);
    }
    kernels::xpay(z, rz_new / rz, p);
    rz = rz_new;
  }
  std::copy(best.begin(), best.end(), x.begin());
  rep.relative_residual = residual_into(A, b, x, r) / bnorm;
  rep.message = "cg: iteration limit reached";
  return rep;
}

PreconditionerFn jacobi_preconditioner(const SparseOperator& A) {
  Vector inv = A.diagonal();
  for (double& d : inv) {
    if (!(d > 0)) throw std::invalid_argument("diagonal preconditioner needs a positive diagonal");
    d = 1.0 / d;
  }
  return [inv = std::move(inv)](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv[i] * r[i];
  };
}

MultigridHierarchy::MultigridHierarchy(const Mesh& mesh, std::span<const char> fixed, int max_levels)
    : fixed_(fixed.begin(), fixed.end()) {
  if (fixed_.size() != mesh.num_vertices()) throw std::invalid_argument("multigrid: mask size mismatch");
  if (max_levels < 1) throw std::invalid_argument("multigrid: need at least one level");
  std::vector<int> counts = mesh.level_vertex_counts;
  if (counts.empty() || counts.back() != static_cast<int>(mesh.num_vertices())) {
    throw std::invalid_argument("multigrid: refinement history does not end at the mesh");
  }
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] <= counts[k - 1]) throw std::invalid_argument("multigrid: refinement levels are not nested");
  }
  if (static_cast<int>(counts.size()) > max_levels) counts.erase(counts.begin(), counts.end() - max_levels);
  sizes_ = counts;

  for (std::size_t k = 1; k < sizes_.size(); ++k) {
    const int nc = sizes_[k - 1], nf = sizes_[k];
    Prolongation P;
    P.fine = nf;
    P.coarse = nc;
    P.row_ptr.assign(nf + 1, 0);
    for (int i = nc; i < nf; ++i) {
      const auto [a, b] = mesh.parents[i];
      if (a < 0 || b < 0 || a >= nc || b >= nc) {
        throw std::invalid_argument("multigrid: vertex parents are not on the coarser level");
      }
    }
    for (int i = 0; i < nf; ++i) {
      if (!fixed_[i]) {
        if (i < nc) {
          P.cols.push_back(i);
          P.weights.push_back(1.0);
        } else {
          const auto [a, b] = mesh.parents[i];
          for (int q : {std::min(a, b), std::max(a, b)}) {
            if (!fixed_[q]) {
              P.cols.push_back(q);
              P.weights.push_back(0.5);
            }
          }
        }
      }
      P.row_ptr[i + 1] = static_cast<int>(P.cols.size());
    }
    transfers_.push_back(std::move(P));
  }
}

std::vector<SparseOperator> MultigridHierarchy::galerkin_levels(const SparseOperator& fine) const {
  if (fine.size() != sizes_.back()) throw std::invalid_argument("multigrid: operator size mismatch");
  std::vector<SparseOperator> out(sizes_.size());
  out.back() = fine.constrained(fixed_);
  for (int k = num_levels() - 1; k >= 1; --k) {
    out[k - 1] = galerkin_product(out[k], transfers_[k - 1])
                     .constrained(std::span<const char>(fixed_).first(sizes_[k - 1]));
  }
  return out;
}

struct Multigrid::Coarse {
  Eigen::LLT<Eigen::MatrixXd> llt;
};

Multigrid::Multigrid(std::shared_ptr<const MultigridHierarchy> hierarchy, std::vector<SparseOperator> levels,
                     MultigridOptions options)
    : hierarchy_(std::move(hierarchy)), levels_(std::move(levels)), options_(options) {
  if (static_cast<int>(levels_.size()) != hierarchy_->num_levels()) {
    throw std::invalid_argument("multigrid: one operator per level required");
  }
  for (int k = 0; k < num_levels(); ++k) {
    if (levels_[k].size() != hierarchy_->level_size(k)) throw std::invalid_argument("multigrid: level size mismatch");
    Vector d = levels_[k].diagonal();
    for (double& v : d) {
      if (!(v > 0)) throw std::invalid_argument("multigrid: level operator has a non-positive diagonal");
      v = 1.0 / v;
    }
    inv_diag_.push_back(std::move(d));
    r_.emplace_back(levels_[k].size());
    b_.emplace_back(levels_[k].size());
    x_.emplace_back(levels_[k].size());
  }
  const SparseOperator& A0 = levels_[0];
  const int n0 = A0.size();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n0, n0);
  const auto& p = A0.pattern();
  for (int i = 0; i < n0; ++i) {
    for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) dense(i, p.cols[k]) = A0.values()[k];
  }
  coarse_ = std::make_unique<Coarse>();
  coarse_->llt.compute(dense);
  if (coarse_->llt.info() != Eigen::Success) throw std::invalid_argument("multigrid: coarse operator is not SPD");
}

Multigrid::~Multigrid() = default;
Multigrid::Multigrid(Multigrid&&) noexcept = default;
Multigrid& Multigrid::operator=(Multigrid&&) noexcept = default;

void Multigrid::smooth(int k, std::span<const double> b, std::span<double> x, bool forward) const {
  const SparseOperator& A = levels_[k];
  const auto& p = A.pattern();
  const auto v = A.values();
  const auto& dinv = inv_diag_[k];
  const int n = A.size();
  if (options_.smoother == Smoother::jacobi) {
    Vector& r = r_[k];
    A.apply(x, r);
    const double w = options_.jacobi_weight;
    for (int i = 0; i < n; ++i) x[i] += w * dinv[i] * (b[i] - r[i]);
    return;
  }
  auto relax = [&](int i) {
    double s = b[i];
    for (int q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q) {
      if (p.cols[q] != i) s -= v[q] * x[p.cols[q]];
    }
    x[i] = s * dinv[i];
  };
  if (forward) {
    for (int i = 0; i < n; ++i) relax(i);
  } else {
    for (int i = n - 1; i >= 0; --i) relax(i);
  }
}

void Multigrid::cycle(int k, std::span<const double> b, std::span<double> x) const {
  if (k == 0) {
    Eigen::Map<const Eigen::VectorXd> bb(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) = coarse_->llt.solve(bb);
    return;
  }
  std::fill(x.begin(), x.end(), 0.0);
  // symmetric Gauss-Seidel: forward sweeps down, backward sweeps up
  for (int s = 0; s < options_.pre_smooth; ++s) smooth(k, b, x, true);
  Vector& r = r_[k];
  residual_into(levels_[k], b, x, r);
  const Prolongation& P = hierarchy_->prolongation(k);
  P.restrict_to(r, b_[k - 1]);
  cycle(k - 1, b_[k - 1], x_[k - 1]);
  P.prolong(x_[k - 1], r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += r[i];
  for (int s = 0; s < options_.post_smooth; ++s) smooth(k, b, x, false);
}

void Multigrid::apply(std::span<const double> r, std::span<double> z) const {
  cycle(num_levels() - 1, r, z);
}

PreconditionerFn Multigrid::as_preconditioner() const {
  return [this](std::span<const double> r, std::span<double> z) { apply(r, z); };
}

ShiftedLevels::ShiftedLevels(std::shared_ptr<const MultigridHierarchy> hierarchy, const SparseOperator& T,
                             const SparseOperator& S)
    : hierarchy_(std::move(hierarchy)) {
  if (T.pattern_ptr() != S.pattern_ptr()) throw std::invalid_argument("shifted levels: T and S must share a pattern");
  const int L = hierarchy_->num_levels();
  T_.resize(L);
  S_.resize(L);
  T_[L - 1] = T;
  S_[L - 1] = S;
  for (int k = L - 1; k >= 1; --k) {
    const Prolongation& P = hierarchy_->prolongation(k);
    T_[k - 1] = galerkin_product(T_[k], P);
    SparseOperator s = galerkin_product(S_[k], P);
    const auto& pt = T_[k - 1].pattern();
    const auto& ps = s.pattern();
    if (pt.row_ptr != ps.row_ptr || pt.cols != ps.cols) throw std::logic_error("shifted levels: pattern mismatch");
    S_[k - 1] = SparseOperator(T_[k - 1].pattern_ptr(), Vector(s.values().begin(), s.values().end()));
  }
}

std::vector<SparseOperator> ShiftedLevels::levels(double shift) const {
  std::vector<SparseOperator> out;
  const auto fixed = hierarchy_->fixed();
  for (std::size_t k = 0; k < T_.size(); ++k) {
    out.push_back(T_[k].combine(1.0, S_[k], -shift).constrained(fixed.first(T_[k].size())));
  }
  return out;
}

Multigrid ShiftedLevels::multigrid(double shift, MultigridOptions options) const {
  return Multigrid(hierarchy_, levels(shift), options);
}

}  // namespace h2dft
