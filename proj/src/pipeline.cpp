#include "mmot/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "mmot/analysis.hpp"
#include "mmot/duality.hpp"
#include "mmot/errors.hpp"
#include "mmot/io.hpp"
#include "mmot/oracle.hpp"

namespace mmot::pipeline {

using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

json number(double v) {
  if (std::isfinite(v)) return v;
  return io::format_number(v);
}

json grid_json(const GridSpec& g) {
  return json{{"k", g.k},
              {"n_t", g.n_t},
              {"n_x", g.n_x},
              {"scaling_mode", to_string(g.scaling)},
              {"indexing", "row-major, axis 0 slowest, periodic"},
              {"cell_weight", "1/n_t"}};
}

double semiconvex_correction(const RunConfig& config, const std::vector<DiscreteMeasure>& marginals) {
  return semiconvex_shift(config.cost.function(), config.alpha, marginals).correction;
}

RunConfig config_of(const fs::path& dir) {
  const json manifest = io::read_json(dir / "manifest.json");
  if (!manifest.contains("config")) throw MissingArtifactError("manifest.json has no config");
  return parse_config(manifest["config"]);
}

double max_marginal_deviation(const DiscreteMeasure& coupling, const std::vector<DiscreteMeasure>& marginals) {
  double dev = 0.0;
  for (std::size_t l = 0; l < marginals.size(); ++l) {
    const DiscreteMeasure m = marginalize(coupling, static_cast<int>(l));
    for (std::size_t j = 0; j < m.size(); ++j) dev = std::max(dev, std::abs(m.mass[j] - marginals[l].mass[j]));
  }
  return dev;
}

}  // namespace

void prepare_directory(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir)) throw ConfigError("output.directory: '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw ConfigError("output.directory: '" + dir.string() + "' already exists; pass --force to overwrite");
  }
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output.directory: cannot create '" + dir.string() + "': " + ec.message());
}

SolveOutcome run_solve(const RunConfig& config, const fs::path& dir, bool force) {
  const ConstraintSystem system = build_constraints(config);
  prepare_directory(dir, force);

  json manifest{{"manifest_version", kManifestVersion},
                {"command", "solve"},
                {"config", to_json(config)},
                {"grid", grid_json(config.grid)}};

  SolverDiagnostics rows;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  SolveOutcome out;
  try {
    out.result = solve(system, config.cost, config.solver, std::nullopt,
                       [&](const DiagnosticsRow& r) { rows.push_back(r); });
  } catch (const ConvergenceError& e) {
    const CouplingOperator k(config.grid, config.cost);
    const double norm = estimate_opnorm(k.as_linear_operator(), 1, config.solver.seed).value;
    manifest["status"] = "failed";
    manifest["opnorm_estimate"] = norm;
    manifest["step_product"] = config.solver.sigma * config.solver.tau * norm * norm;
    manifest["error"] = e.what();
    manifest["achieved_residual"] = number(e.achieved_residual());
    manifest["wall_clock_seconds"] = elapsed();
    io::write_text(dir / "diagnostics.csv", io::diagnostics_csv(rows));
    io::write_json(dir / "manifest.json", manifest);
    throw;
  }
  const double seconds = elapsed();
  const SolveResult& r = out.result;

  const TerminalCoupling terminal = terminal_coupling(r.staggered);
  const ResidualReport residual = residual_report(r.staggered, system);
  const double deviation = max_marginal_deviation(terminal.coupling, system.marginals());
  const double bound = residual.marginal_inf + 2.0 * terminal.clipped_mass + 1e-12;
  std::vector<std::string> warnings = r.warnings;
  if (deviation > bound)
    warnings.push_back("terminal coupling marginals deviate by " + io::format_number(deviation) +
                       ", above the residual-plus-clipping bound " + io::format_number(bound));

  const double objective = solver_objective(r.staggered, config.cost);
  const double strict = dynamic_cost(r.centered, config.cost, config.grid, DomainPolicy::strict);

  manifest["status"] = "ok";
  manifest["opnorm_estimate"] = r.opnorm;
  manifest["step_product"] = r.step_product;
  manifest["step_rule_satisfied"] = r.step_product < 1.0;
  manifest["warnings"] = warnings;
  manifest["wall_clock_seconds"] = seconds;
  manifest["objective"] = number(objective);
  manifest["primal_objective"] = number(strict);
  manifest["semiconvex_correction"] = semiconvex_correction(config, system.marginals());
  manifest["residuals"] = {{"continuity_inf", residual.continuity_inf},
                           {"marginal_inf", residual.marginal_inf},
                           {"source_inf", residual.source_inf},
                           {"min_mass", residual.min_mass}};
  manifest["terminal"] = {{"clipped_mass", terminal.clipped_mass},
                          {"marginal_deviation", deviation},
                          {"marginal_bound", bound},
                          {"marginal_check", deviation <= bound}};
  manifest["artifacts"] = json::array({"diagnostics.csv", "coupling.csv", "pi_s.csv"});
  for (int l = 0; l < config.k; ++l) manifest["artifacts"].push_back("m_s_" + std::to_string(l + 1) + ".csv");

  io::write_text(dir / "diagnostics.csv", io::diagnostics_csv(r.diagnostics));
  io::write_text(dir / "coupling.csv", io::coupling_csv(terminal.coupling));
  io::write_text(dir / "pi_s.csv", io::pi_csv(r.staggered));
  for (int l = 0; l < config.k; ++l)
    io::write_text(dir / ("m_s_" + std::to_string(l + 1) + ".csv"), io::momentum_csv(r.staggered, l));
  io::write_json(dir / "manifest.json", manifest);
  out.manifest = std::move(manifest);
  return out;
}

json run_compare(const fs::path& dir) {
  const RunConfig config = config_of(dir);
  std::vector<fs::path> momentum;
  for (int l = 0; l < config.k; ++l) momentum.push_back(dir / ("m_s_" + std::to_string(l + 1) + ".csv"));
  const StaggeredField u = io::read_staggered(dir / "pi_s.csv", momentum, config.grid);
  const TerminalCoupling terminal = terminal_coupling(u);
  const auto marginals = build_marginals(config);

  std::string csv = "target,x1,T_est,T_ref,circular_error,valid\n";
  std::vector<io::MapPanel> panels;
  json maps = json::array();
  const MapEstimate identity = identity_estimate(config.grid.n_x);
  for (int l = 1; l < config.k; ++l) {
    const DiscreteMeasure pair = pair_marginal(terminal.coupling, 0, l);
    const MapEstimate est = circular_map_extract(pair, marginals[0], config.condition_on);
    const MapTable ref = analytic_map(marginals[0], marginals[l]);
    const MapError err = map_error(est, ref, marginals[0]);
    const MapError base = map_error(identity, ref, marginals[0]);
    for (std::size_t i = 0; i < est.x.size(); ++i) {
      csv += std::to_string(l + 1) + ',' + io::format_number(est.x[i]) + ',' + io::format_number(est.value[i]) + ',' +
             io::format_number(ref.value[i]) + ',' + io::format_number(circular_distance(est.value[i], ref.value[i])) +
             ',' + (est.valid[i] ? "1" : "0") + '\n';
    }
    maps.push_back({{"source", 1},
                    {"target", l + 1},
                    {"l1", err.l1},
                    {"linf", err.linf},
                    {"coverage", err.coverage},
                    {"baseline_identity_l1", base.l1}});
    panels.push_back({l + 1, est, ref});
  }
  const json summary{{"maps", maps},
                     {"clipped_mass", terminal.clipped_mass},
                     {"conditioning", config.condition_on == Conditioning::row_marginal ? "row_marginal" : "target_mu1"}};
  io::write_text(dir / "maps.csv", csv);
  io::write_json(dir / "summary.json", summary);
  io::write_text(dir / "maps.svg", io::maps_svg(panels));
  return summary;
}

json CheckReport::to_json() const {
  return json{{"hj_residual", number(hj_residual)},
              {"domination_residual", number(domination_residual)},
              {"dual_objective", number(dual_objective)},
              {"primal_objective", number(primal_objective)},
              {"gap", number(gap)},
              {"tolerance", tolerance},
              {"feasible", feasible}};
}

CheckReport run_check(const fs::path& path) {
  const bool is_dir = fs::is_directory(path);
  if (!is_dir && !fs::exists(path)) throw MissingArtifactError("missing artifact '" + path.string() + "'");
  const fs::path dir = is_dir ? path : (path.has_parent_path() ? path.parent_path() : fs::path("."));
  const json manifest = io::read_json(dir / "manifest.json");
  const RunConfig config = parse_config(manifest.at("config"));
  const auto marginals = build_marginals(config);
  const DiscreteMeasure source = build_source(config);

  const fs::path potentials_path = is_dir ? dir / "potentials.csv" : path;
  DualPotentials p(config.grid);
  const bool zero = is_dir && !fs::exists(potentials_path);
  if (!zero) p = io::read_potentials(potentials_path, config.grid);

  if (!manifest.contains("primal_objective"))
    throw MissingArtifactError("manifest.json records no primal objective");
  const json& po = manifest["primal_objective"];
  CheckReport report;
  report.primal_objective = po.is_number() ? po.get<double>() : std::stod(po.get<std::string>());
  report.hj_residual = hj_residual(p, config.cost);
  report.domination_residual = domination_check(p, marginals);
  report.dual_objective = dual_objective(p, marginals, source);
  report.gap = report.primal_objective - report.dual_objective;
  report.tolerance = config.check_tolerance;
  report.feasible = report.hj_residual <= config.check_tolerance && report.domination_residual <= config.check_tolerance;

  json out = report.to_json();
  out["potentials"] = zero ? "zero" : potentials_path.filename().string();
  io::write_json(dir / "check.json", out);
  return report;
}

json run_oracle(const RunConfig& config, const fs::path& dir, bool force) {
  if (config.cost.type != CostType::quadratic_pairwise)
    throw ConfigError("problem.cost.type: the oracle supports quadratic_pairwise only");
  const auto marginals = build_marginals(config);
  build_source(config);
  prepare_directory(dir, force);

  for (int l = 1; l < config.k; ++l)
    io::write_text(dir / ("map_1_to_" + std::to_string(l + 1) + ".csv"),
                   io::map_csv(analytic_map(marginals[0], marginals[l])));
  const CouplingTable gamma = comonotone_coupling(marginals);
  io::write_text(dir / "comonotone_coupling.csv", io::coupling_csv(gamma.to_dense()));

  const double value = static_optimum(marginals, config.cost);
  const double correction = semiconvex_correction(config, marginals);
  const json result{{"static_optimum", value},
                    {"static_cost_of_coupling", static_cost(gamma, config.cost)},
                    {"semiconvex_correction", correction},
                    {"cost", to_string(config.cost.type)},
                    {"scale", config.cost.scale}};
  io::write_json(dir / "static_optimum.json", result);

  json manifest{{"manifest_version", kManifestVersion},
                {"command", "oracle"},
                {"status", "ok"},
                {"config", to_json(config)},
                {"grid", grid_json(config.grid)},
                {"primal_objective", value}};
  if (config.k == 2) {
    DualPotentials p = lift_static_duals(static_dual_potentials(marginals, config.cost), config.cost, config.grid);
    const double shift = restore_hj_feasibility(p, config.cost);
    manifest["potentials"] = {{"hj_shift", shift}, {"dual_objective", dual_objective(p, marginals, build_source(config))}};
    io::write_text(dir / "potentials.csv", io::potentials_csv(p));
  }
  io::write_json(dir / "manifest.json", manifest);
  return result;
}

}  // namespace mmot::pipeline
