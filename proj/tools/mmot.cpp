#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mmot/config.hpp"
#include "mmot/errors.hpp"
#include "mmot/io.hpp"
#include "mmot/pipeline.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, solver_error = 3, missing_artifacts = 4, infeasible = 5, other = 1 };

struct Options {
  std::string config;
  std::string out;
  bool force = false;
  int threads = 0;
  std::string target;
};

mmot::RunConfig resolve(const Options& o) {
  mmot::RunConfig c = o.config.empty() ? mmot::parse_config(nlohmann::json::object()) : mmot::load_config(o.config);
  if (!o.out.empty()) c.output_directory = o.out;
  if (o.threads > 0) c.solver.threads = o.threads;
  return c;
}

std::string run_directory(const Options& o) {
  if (!o.target.empty()) return o.target;
  if (!o.out.empty()) return o.out;
  return resolve(o).output_directory;
}

int cmd_solve(const Options& o) {
  const mmot::RunConfig c = resolve(o);
  const auto outcome = mmot::pipeline::run_solve(c, c.output_directory, o.force);
  for (const auto& w : outcome.result.warnings) std::cerr << "warning: " << w << '\n';
  const auto& m = outcome.manifest;
  std::cout << "solve: " << c.solver.iterations << " iterations in " << m["wall_clock_seconds"].get<double>()
            << " s, objective " << m["objective"].dump() << ", step product " << m["step_product"].get<double>()
            << ", clipped mass " << m["terminal"]["clipped_mass"].get<double>() << " -> " << c.output_directory
            << '\n';
  return ok;
}

int cmd_compare(const Options& o) {
  const std::string dir = run_directory(o);
  const auto summary = mmot::pipeline::run_compare(dir);
  for (const auto& m : summary["maps"]) {
    std::cout << "map 1->" << m["target"].get<int>() << ": l1 " << m["l1"].get<double>() << ", linf "
              << m["linf"].get<double>() << ", coverage " << m["coverage"].get<double>() << ", identity baseline "
              << m["baseline_identity_l1"].get<double>() << '\n';
  }
  std::cout << "clipped mass " << summary["clipped_mass"].get<double>() << '\n';
  return ok;
}

int cmd_check(const Options& o) {
  const std::string path = run_directory(o);
  const auto r = mmot::pipeline::run_check(path);
  std::cout << "hj_residual " << mmot::io::format_number(r.hj_residual) << "\ndomination_residual "
            << mmot::io::format_number(r.domination_residual) << "\ndual_objective "
            << mmot::io::format_number(r.dual_objective) << "\nprimal_objective "
            << mmot::io::format_number(r.primal_objective) << "\ngap " << mmot::io::format_number(r.gap) << '\n';
  if (!r.feasible) {
    std::cerr << "infeasible potentials: residuals exceed tolerance " << r.tolerance << '\n';
    return infeasible;
  }
  return ok;
}

int cmd_oracle(const Options& o) {
  const mmot::RunConfig c = resolve(o);
  const auto result = mmot::pipeline::run_oracle(c, c.output_directory, o.force);
  std::cout << "static optimum " << mmot::io::format_number(result["static_optimum"].get<double>()) << " -> "
            << c.output_directory << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-marginal dynamical optimal transport"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "Run configuration (JSON); a run manifest is accepted too");
  app.add_option("--out", o.out, "Run directory, overriding output.directory");
  app.add_flag("--force", o.force, "Overwrite an existing run directory");
  app.add_option("--threads", o.threads, "Worker threads for the per-cell loops")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "Solve the configured problem");
  auto* compare = app.add_subcommand("compare", "Compare numerical maps of a run with the analytic maps");
  compare->add_option("run", o.target, "Run directory");
  auto* check = app.add_subcommand("check", "Check dual feasibility and the weak-duality gap");
  check->add_option("path", o.target, "Run directory or potentials CSV");
  auto* oracle = app.add_subcommand("oracle", "Write analytic maps, comonotone coupling and static optimum");
  for (auto* sub : {solve, compare, check, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*compare) return cmd_compare(o);
    if (*check) return cmd_check(o);
    return cmd_oracle(o);
  } catch (const mmot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const mmot::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return config_error;
  } catch (const mmot::ConvergenceError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return solver_error;
  } catch (const mmot::DegenerateOutputError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return solver_error;
  } catch (const mmot::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return missing_artifacts;
  } catch (const mmot::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return other;
  }
}
