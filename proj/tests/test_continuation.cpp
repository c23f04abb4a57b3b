#include <doctest.h>

#include <cmath>
#include <sstream>

#include "h2dft/continuation.hpp"

using namespace h2dft;

namespace {

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.discretization.local_refine_rounds = 7;
  cfg.discretization.global_refine_rounds = 1;
  cfg.scf.tol_energy = 1e-7;
  return cfg;
}

BranchPoint synthetic(double p, BranchLabel label, double energy, std::optional<double> lambda = std::nullopt) {
  BranchPoint b;
  b.R = p;
  b.bond_length = 2 * p;
  b.alpha = 0.93;
  b.label = label;
  b.converged = true;
  b.energy.kinetic = energy;
  if (lambda) {
    b.hessian.computed = true;
    b.hessian.converged = true;
    b.hessian.eigenvalues = {*lambda};
  }
  return b;
}

const BranchPoint* find(const std::vector<BranchPoint>& pts, double R, BranchLabel label) {
  for (const auto& p : pts)
    if (p.R == R && p.label == label) return &p;
  return nullptr;
}

}  // namespace

TEST_CASE("branch labels from metrics") {
  StateMetrics m;
  m.symmetry = 1e-5;
  CHECK(classify_branch(m) == BranchLabel::delocalized);
  m.symmetry = 1.2;
  m.centroid_plus = 0.9;
  m.centroid_minus = -0.9;
  CHECK(classify_branch(m) == BranchLabel::antiferro);
  m.centroid_plus = m.centroid_minus = -0.95;
  CHECK(classify_branch(m) == BranchLabel::ionic_left);
  m.centroid_plus = m.centroid_minus = 0.95;
  CHECK(classify_branch(m) == BranchLabel::ionic_right);
  m.centroid_plus = 0.05;
  m.centroid_minus = -0.05;
  CHECK(classify_branch(m) == BranchLabel::unclassified);
  for (BranchLabel b : {BranchLabel::delocalized, BranchLabel::antiferro, BranchLabel::ionic_left,
                        BranchLabel::ionic_right, BranchLabel::unclassified})
    CHECK(branch_label_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(branch_label_from_string("ferro"), std::invalid_argument);
}

TEST_CASE("bifurcation detection on synthetic branches") {
  SUBCASE("eigenvalue sign change is interpolated") {
    std::vector<BranchPoint> pts{synthetic(1.0, BranchLabel::delocalized, -1.0, 0.2),
                                 synthetic(2.0, BranchLabel::delocalized, -1.0, -0.2)};
    auto b = detect_bifurcation(pts, SweepParameter::R);
    REQUIRE(b);
    CHECK(b->value == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(b->method == "eigenvalue");
  }
  SUBCASE("order of the points does not matter") {
    std::vector<BranchPoint> pts{synthetic(3.0, BranchLabel::delocalized, -1.0, -0.4),
                                 synthetic(1.0, BranchLabel::delocalized, -1.0, 0.3),
                                 synthetic(2.0, BranchLabel::delocalized, -1.0, 0.1)};
    auto b = detect_bifurcation(pts, SweepParameter::R);
    REQUIRE(b);
    CHECK(b->value == doctest::Approx(2.2));
  }
  SUBCASE("energy fallback uses the first split interval") {
    std::vector<BranchPoint> pts{synthetic(1.0, BranchLabel::delocalized, -1.0),
                                 synthetic(2.0, BranchLabel::delocalized, -0.9),
                                 synthetic(2.0, BranchLabel::antiferro, -0.95),
                                 synthetic(3.0, BranchLabel::delocalized, -0.8),
                                 synthetic(3.0, BranchLabel::antiferro, -0.9)};
    auto b = detect_bifurcation(pts, SweepParameter::R);
    REQUIRE(b);
    CHECK(b->value == doctest::Approx(1.5));
    CHECK(b->method == "energy");
  }
  SUBCASE("no split and no sign change") {
    std::vector<BranchPoint> pts{synthetic(1.0, BranchLabel::delocalized, -1.0, 0.2),
                                 synthetic(2.0, BranchLabel::delocalized, -0.9, 0.1)};
    CHECK_FALSE(detect_bifurcation(pts, SweepParameter::R));
  }
  SUBCASE("split at the first sample is not bracketed") {
    std::vector<BranchPoint> pts{synthetic(1.0, BranchLabel::delocalized, -1.0),
                                 synthetic(1.0, BranchLabel::antiferro, -1.1)};
    CHECK_FALSE(detect_bifurcation(pts, SweepParameter::R));
  }
}

TEST_CASE("branch table output") {
  std::vector<BranchPoint> pts{synthetic(1.0, BranchLabel::delocalized, -1.0, 0.2),
                               synthetic(2.0, BranchLabel::antiferro, -0.9)};
  pts[0].hessian.n_negative = 0;
  std::ostringstream os;
  write_branch_csv(os, pts);
  std::istringstream is(os.str());
  std::string header, row0, row1;
  std::getline(is, header);
  std::getline(is, row0);
  std::getline(is, row1);
  CHECK(header ==
        "alpha,R,bond_length,branch,E_total,E_kinetic,E_nuclear,E_hartree,E_exchange,s,d,n_negative_eigs,converged");
  CHECK(row0.find(",delocalized,") != std::string::npos);
  CHECK(row0.substr(row0.size() - 7) == ",0,true");
  CHECK(row1.substr(row1.size() - 8) == ",NA,true");

  std::ostringstream again;
  write_branch_csv(again, pts);
  CHECK(again.str() == os.str());
  CHECK(branch_points_json(pts).find("\"branch\": \"antiferro\"") != std::string::npos);

  PhaseDiagram pd;
  pd.boundary.push_back({0.93, 1.6, "eigenvalue", 0});
  pd.boundary.push_back({0.5, std::nullopt, "open", 1});
  std::ostringstream ps;
  write_phase_csv(ps, pd);
  CHECK(ps.str() == "alpha,critical_R,critical_bond_length,method,open\n0.93,1.6,3.2,eigenvalue,false\n0.5,NA,NA,open,true\n");
  CHECK(phase_boundary_json(pd).find("\"critical_R\": null") != std::string::npos);
}

TEST_CASE("sweep configuration errors") {
  SweepConfig cfg = small_sweep();
  CHECK_THROWS_AS(sweep(cfg), std::invalid_argument);
  cfg.grid = {1.0, 2.0, 1.5};
  CHECK_THROWS_AS(sweep(cfg), std::invalid_argument);
  cfg.grid = {1.0, -1.0};
  CHECK_THROWS_AS(sweep(cfg), std::invalid_argument);
  cfg.grid = {1.0};
  cfg.inits.clear();
  CHECK_THROWS_AS(sweep(cfg), std::invalid_argument);
  CHECK(sweep_parameter_from_string("alpha") == SweepParameter::alpha);
  CHECK_THROWS_AS(sweep_parameter_from_string("beta"), std::invalid_argument);
}

TEST_CASE("without exchange every init reaches the same state") {
  SweepConfig cfg = small_sweep();
  cfg.fixed_value = 0.0;
  cfg.grid = {1.0, 1.5};
  cfg.inits = {InitKind::delocalized, InitKind::antiferro, InitKind::ionic_left};
  cfg.symmetric_delocalized = false;
  const auto pts = sweep(cfg);
  REQUIRE(pts.size() == 2);
  for (const auto& p : pts) {
    CHECK(p.converged);
    CHECK(p.label == BranchLabel::delocalized);
    CHECK(p.merged.size() == 2);
  }
  CHECK(pts[1].warm_started);
  CHECK_FALSE(detect_bifurcation(pts, SweepParameter::R));
}

TEST_CASE("R sweep at alpha = 0.93 across the symmetry breaking") {
  SweepConfig cfg = small_sweep();
  cfg.grid = {1.0, 1.75};
  const auto up = sweep(cfg);
  cfg.grid = {1.75, 1.0};
  const auto down = sweep(cfg);

  const BranchPoint* d1 = find(up, 1.0, BranchLabel::delocalized);
  REQUIRE(d1);
  CHECK(d1->converged);
  CHECK(d1->merged.size() == 1);  // the antiferro init collapses at bond length 2
  CHECK_FALSE(find(up, 1.0, BranchLabel::antiferro));

  const BranchPoint* dd = find(up, 1.75, BranchLabel::delocalized);
  const BranchPoint* af = find(up, 1.75, BranchLabel::antiferro);
  REQUIRE(dd);
  REQUIRE(af);
  CHECK(af->energy.total() < dd->energy.total() - 1e-4);

  for (double R : {1.0, 1.75}) {
    for (BranchLabel b : {BranchLabel::delocalized, BranchLabel::antiferro}) {
      const BranchPoint* u = find(up, R, b);
      const BranchPoint* d = find(down, R, b);
      CHECK((u == nullptr) == (d == nullptr));
      if (u && d) CHECK(std::abs(u->energy.total() - d->energy.total()) < 10 * cfg.scf.tol_energy);
    }
  }
  auto b = detect_bifurcation(up, SweepParameter::R, cfg.scf.tol_energy);
  REQUIRE(b);
  CHECK(b->method == "energy");
  CHECK(b->value == doctest::Approx(1.375));
}

TEST_CASE("ionic states come in mirror pairs") {
  SweepConfig cfg = small_sweep();
  cfg.fixed_value = 1.0;
  cfg.parameter = SweepParameter::alpha;
  cfg.grid = {6.0};
  cfg.inits = {InitKind::ionic_left, InitKind::ionic_right};
  cfg.scf.gaussian_zeta = 0.05 * 36;
  const auto pts = sweep(cfg);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].converged);
  CHECK(pts[1].converged);
  CHECK(pts[0].label == BranchLabel::ionic_left);
  CHECK(pts[1].label == BranchLabel::ionic_right);
  CHECK(pts[0].mean == doctest::Approx(-pts[1].mean).epsilon(1e-4));
  MESSAGE("ionic energies " << pts[0].energy.total() << " " << pts[1].energy.total());
  CHECK(std::abs(pts[0].energy.total() - pts[1].energy.total()) < 1e-8);
}
