#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "mmot/config.hpp"
#include "mmot/errors.hpp"
#include "mmot/io.hpp"
#include "mmot/pipeline.hpp"

using namespace mmot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmot_unit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

RunConfig small_config() {
  json j = {{"problem", {{"marginals", json::array({"sine_bump", "tent"})}}},
            {"grid", {{"n_t", 4}, {"n_x", 5}}},
            {"solver", {{"sigma", 3.0}, {"tau", 0.15}, {"iterations", 60}, {"log_every", 10}}}};
  return parse_config(j);
}

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.k == 3);
  CHECK(c.grid.n_t == 10);
  CHECK(c.grid.n_x == 10);
  CHECK(c.solver.sigma == 85.0);
  CHECK(c.solver.tau == 0.1);
  CHECK(c.solver.theta == 1.0);
  CHECK(c.solver.iterations == 5000);
  CHECK(c.marginals[0].preset == "sine_bump");
  CHECK(c.marginals[2].preset == "double_tent");
  CHECK(build_marginals(c).size() == 3);
  CHECK(std::abs(build_source(c).total() - 1.0) <= 1e-12);
}

TEST_CASE("config errors name the key") {
  CHECK(config_error({{"solver", {{"sigma", 0.0}}}}).find("solver.sigma") == 0);
  CHECK(config_error({{"solver", {{"sigmaa", 1.0}}}}).find("solver.sigmaa") == 0);
  CHECK(config_error({{"grid", {{"n_x", "ten"}}}}).find("grid.n_x") == 0);
  CHECK(config_error({{"grid", {{"scaling_mode", "linear"}}}}).find("grid.scaling_mode") == 0);
  CHECK(config_error({{"problem", {{"cost", {{"type", "cubic"}}}}}}).find("problem.cost.type") == 0);
  CHECK(config_error({{"problem", {{"marginals", json::array({"tent", "bump"})}}}}).find("problem.marginals[1]") ==
        0);
  CHECK(config_error({{"problem", {{"k", 1}}}}).find("problem.k") == 0);
  CHECK(config_error({{"extra", 1}}).find("config.extra") == 0);
  CHECK(config_error({{"solver", {{"theta", 1.5}}}}).find("solver.theta") == 0);
}

TEST_CASE("config round trip") {
  json j = {{"problem",
             {{"marginals", json::array({"tent", json::array({1, 2, 3, 4, 0})})},
              {"cost", {{"type", "quadratic_full"}, {"scale", 2.5}}},
              {"source", {{"type", "delta"}, {"point", json::array({1, 2})}}}}},
            {"grid", {{"n_t", 6}, {"n_x", 5}, {"scaling_mode", "reciprocal_coefficients"}}},
            {"solver", {{"sigma", 2.0}, {"tau", 0.2}, {"seed", 9}}},
            {"diffusion", {{"epsilon", 0.01}}}};
  const RunConfig a = parse_config(j);
  const RunConfig b = parse_config(to_json(a));
  CHECK(to_json(a) == to_json(b));
  CHECK(b.cost.scale == 2.5);
  CHECK(b.grid.scaling == ScalingMode::reciprocal_coefficients);
  CHECK(b.constraints.diffusion == 0.01);
  const DiscreteMeasure src = build_source(b);
  CHECK(src.mass[1 * 5 + 2] == 1.0);
  CHECK(build_marginals(b)[1].mass[1] == doctest::Approx(0.2));
}

TEST_CASE("numbers survive text round trips") {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
    CHECK(std::stod(io::format_number(v)) == v);
  }
  CHECK(io::format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("missing artifacts") {
  CHECK_THROWS_AS(io::read_text(scratch("missing") / "nothing.csv"), MissingArtifactError);
  CHECK_THROWS_AS(pipeline::run_compare(scratch("missing_run")), MissingArtifactError);
}

TEST_CASE("solve, compare and check on a small run") {
  const fs::path dir = scratch("solve");
  const RunConfig c = small_config();
  const auto out = pipeline::run_solve(c, dir);
  CHECK(out.manifest["status"] == "ok");
  for (const char* name : {"manifest.json", "diagnostics.csv", "coupling.csv", "pi_s.csv", "m_s_1.csv", "m_s_2.csv"})
    CHECK(fs::exists(dir / name));
  CHECK_THROWS_AS(pipeline::run_solve(c, dir), ConfigError);

  const json manifest = io::read_json(dir / "manifest.json");
  CHECK(parse_config(manifest["config"]).grid.n_x == 5);
  const StaggeredField back = io::read_staggered(dir / "pi_s.csv", {dir / "m_s_1.csv", dir / "m_s_2.csv"}, c.grid);
  for (std::size_t i = 0; i < back.values().size(); ++i) CHECK(back.values()[i] == out.result.staggered.values()[i]);

  const json first = pipeline::run_compare(dir);
  const std::string maps = io::read_text(dir / "maps.csv");
  const json second = pipeline::run_compare(dir);
  CHECK(first == second);
  CHECK(maps == io::read_text(dir / "maps.csv"));
  CHECK(first["maps"].size() == 1);

  // Zero potentials meet the domination bound only at zero and are HJ feasible.
  const auto zero = pipeline::run_check(dir);
  CHECK(zero.hj_residual == doctest::Approx(0.0));
  CHECK(zero.feasible);
  CHECK(fs::exists(dir / "check.json"));

  // lambda(t, x) = t grows too fast to be a subsolution.
  DualPotentials p(c.grid);
  for (int t = 0; t <= c.grid.n_t; ++t)
    for (double& v : p.slice(t)) v = static_cast<double>(t) / c.grid.n_t;
  io::write_text(dir / "potentials.csv", io::potentials_csv(p));
  const auto bad = pipeline::run_check(dir / "potentials.csv");
  CHECK_FALSE(bad.feasible);
  CHECK(bad.hj_residual == doctest::Approx(1.0));
  fs::remove_all(dir);
}

TEST_CASE("oracle run writes feasible potentials") {
  const fs::path dir = scratch("oracle");
  RunConfig c = small_config();
  const json m = pipeline::run_oracle(c, dir);
  for (const char* name : {"map_1_to_2.csv", "comonotone_coupling.csv", "static_optimum.json", "potentials.csv"})
    CHECK(fs::exists(dir / name));
  const auto r = pipeline::run_check(dir);
  CHECK(r.feasible);
  CHECK(r.gap >= -1e-9);
  CHECK(r.gap <= 1.0 / (c.grid.n_x * c.grid.n_x));
  fs::remove_all(dir);

  c.cost.type = CostType::quadratic_full;
  CHECK_THROWS_AS(pipeline::run_oracle(c, dir), ConfigError);
  fs::remove_all(dir);
}
