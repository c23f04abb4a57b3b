#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"

using namespace h2dft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("h2dft_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

app::json small_mesh() { return {{"local_refine_rounds", 7}, {"global_refine_rounds", 1}}; }

std::vector<std::vector<double>> read_csv(const fs::path& file, std::string* header) {
  std::ifstream in(file);
  std::getline(in, *header);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config merging and overrides") {
  const auto d = app::default_config();
  CHECK(d["mesh"]["local_refine_rounds"] == 8);
  CHECK(d["scf"]["tol_energy"] == 1e-6);

  CHECK_THROWS_AS(app::merge_config({{"mesh", {{"local_rounds", 3}}}}), app::ConfigError);
  CHECK_THROWS_AS(app::merge_config({{"mesh", 3}}), app::ConfigError);
  auto cfg = app::merge_config({{"mesh", {{"local_refine_rounds", 5}}}});
  CHECK(cfg["mesh"]["local_refine_rounds"] == 5);
  CHECK(cfg["mesh"]["global_refine_rounds"] == 2);

  app::apply_override(cfg, "system.alpha=0.93");
  app::apply_override(cfg, "system.init=ionic_left");
  app::apply_override(cfg, "sweep.values=[1, 2]");
  CHECK(cfg["system"]["alpha"] == 0.93);
  CHECK(cfg["system"]["init"] == "ionic_left");
  CHECK(cfg["sweep"]["values"].size() == 2);
  CHECK_THROWS_AS(app::apply_override(cfg, "system.gamma=1"), app::ConfigError);
  CHECK_THROWS_AS(app::apply_override(cfg, "system=1"), app::ConfigError);
  CHECK_THROWS_AS(app::apply_override(cfg, "noequals"), app::ConfigError);
}

TEST_CASE("resolving commands") {
  SUBCASE("required keys") {
    CHECK_THROWS_AS(app::resolve("solve", app::merge_config({})), app::ConfigError);
    CHECK_THROWS_AS(app::resolve("solve", app::merge_config({{"system", {{"alpha", 1.0}}}})), app::ConfigError);
    CHECK_THROWS_AS(app::resolve("solve", app::merge_config({{"system", {{"alpha", 1.0}, {"R", 1.0}, {"bond_length", 2.0}}}})),
                    app::ConfigError);
    const auto s = app::resolve("solve", app::merge_config({{"system", {{"alpha", 1.0}, {"bond_length", 3.0}}}}));
    CHECK(*s.R == 1.5);
    CHECK(s.name == "solve");
    CHECK_NOTHROW(app::resolve("soliton", app::merge_config({})));
    CHECK_THROWS_AS(app::resolve("plot", app::merge_config({})), app::ConfigError);
  }
  SUBCASE("grids") {
    auto s = app::resolve("sweep", app::merge_config({{"system", {{"alpha", 0.93}}},
                                                      {"sweep", {{"parameter", "bond_length"},
                                                                 {"values", {{"start", 2.0}, {"stop", 4.5}, {"step", 0.25}}}}}}));
    REQUIRE(s.sweep_values.size() == 11);
    CHECK(s.sweep_values.front() == 1.0);
    CHECK(s.sweep_values.back() == 2.25);
    CHECK(s.sweep_parameter == SweepParameter::R);
    CHECK_THROWS_AS(app::resolve("sweep", app::merge_config({{"system", {{"alpha", 0.93}}},
                                                             {"sweep", {{"parameter", "R"},
                                                                        {"values", {{"start", 1.0}, {"stop", 2.0}, {"step", 0.3}}}}}})),
                    app::ConfigError);
    CHECK_THROWS_AS(app::resolve("sweep", app::merge_config({{"system", {{"alpha", 0.93}}},
                                                             {"sweep", {{"parameter", "R"}, {"values", {1.0, 2.0, 1.5}}}}})),
                    app::ConfigError);
    CHECK_THROWS_AS(app::resolve("sweep", app::merge_config({{"system", {{"R", 1.0}}},
                                                             {"sweep", {{"parameter", "R"}, {"values", {1.0}}}}})),
                    app::ConfigError);
  }
  SUBCASE("invalid values name the problem") {
    try {
      app::resolve("solve", app::merge_config({{"system", {{"alpha", 1.0}, {"R", 1.0}}}, {"scf", {{"mixing", "half"}}}}));
      FAIL("expected a config error");
    } catch (const app::ConfigError& e) {
      CHECK(std::string(e.what()).find("scf.mixing") != std::string::npos);
    }
    CHECK_THROWS_AS(app::resolve("solve", app::merge_config({{"name", "../escape"}, {"system", {{"alpha", 1.0}, {"R", 1.0}}}})),
                    app::ConfigError);
    CHECK_THROWS_AS(app::resolve("solve", app::merge_config({{"system", {{"alpha", 1.0}, {"R", 1.0}}},
                                                             {"hessian", {{"variant", "partial"}}}})),
                    app::ConfigError);
  }
}

TEST_CASE("output root from the environment") {
  const auto s = app::resolve("soliton", app::merge_config({{"name", "profile"}}));
  setenv(app::kOutputRootEnv, "/tmp/h2dft_root", 1);
  CHECK(app::output_directory(s) == fs::path("/tmp/h2dft_root/profile"));
  unsetenv(app::kOutputRootEnv);
  CHECK(app::output_directory(s) == fs::path("output/profile"));
}

TEST_CASE("soliton command") {
  const auto out = scratch("soliton");
  std::ostringstream log;
  const auto s = app::resolve("soliton", app::merge_config({}));
  CHECK(app::run(s, out, log) == app::kOk);
  std::string header;
  const auto rows = read_csv(out / "profile.csv", &header);
  CHECK(header == "r,phi");
  REQUIRE(rows.size() > 1000);
  bool decreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) decreasing = decreasing && rows[i][1] < rows[i - 1][1];
  CHECK(decreasing);
  std::ifstream mf(out / "manifest.json");
  const auto manifest = app::json::parse(mf);
  CHECK(manifest["command"] == "soliton");
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["config"]["soliton"]["step"] == 1e-3);

  // a manifest replays only for its own command
  CHECK_THROWS_AS(app::read_config_file(out / "manifest.json", "solve"), app::ConfigError);
  CHECK(app::read_config_file(out / "manifest.json", "soliton") == manifest["config"]);
}

TEST_CASE("solve command on a small mesh") {
  const auto out = scratch("solve");
  std::ostringstream log;
  auto cfg = app::merge_config({{"system", {{"alpha", 0.93}, {"bond_length", 2.0}}}, {"mesh", small_mesh()}});
  const auto s = app::resolve("solve", cfg);
  CHECK(app::run(s, out, log) == app::kOk);
  std::ifstream in(out / "summary.json");
  const auto summary = app::json::parse(in);
  CHECK(summary["distinct_states"] == 1);  // both inits reach the symmetric state
  CHECK(fs::exists(out / "state_delocalized.ckpt"));
  CHECK(fs::exists(out / "state_delocalized.vtk"));
  CHECK_FALSE(fs::exists(out / "state_antiferro.ckpt"));

  SUBCASE("non-convergence exit code") {
    const auto o2 = scratch("solve_limit");
    app::apply_override(cfg, "scf.max_iterations=2");
    CHECK(app::run(app::resolve("solve", cfg), o2, log) == app::kNotConverged);
    CHECK(fs::exists(o2 / "manifest.json"));
  }
  SUBCASE("hessian from the checkpoint") {
    const auto o3 = scratch("hessian");
    auto hc = cfg;
    app::apply_override(hc, "hessian.checkpoint=\"" + (out / "state_delocalized.ckpt").string() + "\"");
    app::apply_override(hc, "hessian.k=2");
    CHECK(app::run(app::resolve("hessian", hc), o3, log) == app::kOk);
    std::ifstream hin(o3 / "hessian.json");
    const auto h = app::json::parse(hin);
    CHECK(h["state_source"] == "checkpoint");
    CHECK(h["classification"] == "local_min");
    app::apply_override(hc, "system.alpha=1.5");
    CHECK_THROWS_AS(app::run(app::resolve("hessian", hc), scratch("hessian2"), log), app::ConfigError);
  }
}

TEST_CASE("phase command on a single sample") {
  const auto out = scratch("phase");
  std::ostringstream log;
  const auto s = app::resolve(
      "phase", app::merge_config({{"phase", {{"alpha", {0.93}}, {"bond_length", {2.0}}}}, {"mesh", small_mesh()}}));
  CHECK(app::run(s, out, log) == app::kOk);
  std::ifstream in(out / "phase_boundary.csv");
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "alpha,critical_R,critical_bond_length,method,open");
  CHECK(row == "0.93,NA,NA,open,true");
  CHECK_FALSE(std::getline(in, extra));
}
