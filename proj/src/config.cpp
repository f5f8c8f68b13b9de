#include "mmot/config.hpp"

#include <fstream>
#include <set>

#include "mmot/errors.hpp"
#include "mmot/oracle.hpp"

namespace mmot {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + "." + key + ": unknown key");
  }
}

template <class T>
T get(const json& j, const std::string& where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

MarginalSpec parse_marginal(const json& j, const std::string& where) {
  MarginalSpec m;
  if (j.is_string()) {
    m.preset = j.get<std::string>();
  } else if (j.is_array()) {
    try {
      m.mass = j.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ConfigError(where + ": explicit masses must be numbers");
    }
  } else {
    reject_unknown(j, where, {"preset", "delta", "mass"});
    m.preset = get<std::string>(j, where, "preset", m.preset);
    m.delta = get<double>(j, where, "delta", m.delta);
    m.mass = get<std::vector<double>>(j, where, "mass", {});
  }
  if (m.mass.empty()) {
    try {
      preset_from_string(m.preset);
    } catch (const ValidationError&) {
      throw ConfigError(where + ".preset: unknown preset '" + m.preset + "'");
    }
  }
  if (!(m.delta >= 0.0)) throw ConfigError(where + ".delta: must be nonnegative");
  return m;
}

json marginal_json(const MarginalSpec& m) {
  if (!m.mass.empty()) return json{{"mass", m.mass}};
  return json{{"preset", m.preset}, {"delta", m.delta}};
}

DiscreteMeasure realize(const MarginalSpec& m, int n_x, const std::string& where) {
  if (m.mass.empty()) return preset_marginal(preset_from_string(m.preset), n_x, m.delta);
  if (static_cast<int>(m.mass.size()) != n_x) throw ConfigError(where + ".mass: expected n_x entries");
  DiscreteMeasure mu(n_x, 1, m.mass);
  for (double v : mu.mass)
    if (!(v >= 0.0)) throw ConfigError(where + ".mass: entries must be nonnegative");
  if (!(mu.total() > 0.0)) throw ConfigError(where + ".mass: no mass");
  mu.normalize();
  return mu;
}

}  // namespace

RunConfig::RunConfig() {
  marginals = {MarginalSpec{"sine_bump", 0.2, {}}, MarginalSpec{"tent", 0.2, {}},
               MarginalSpec{"double_tent", 0.2, {}}};
  solver.log_every = 1;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  reject_unknown(j, "config", {"problem", "grid", "solver", "diffusion", "output", "analysis", "check"});

  if (j.contains("problem")) {
    const json& p = j["problem"];
    reject_unknown(p, "problem", {"k", "cost", "marginals", "source"});
    if (p.contains("marginals")) {
      if (!p["marginals"].is_array()) throw ConfigError("problem.marginals: expected a list");
      c.marginals.clear();
      int i = 0;
      for (const auto& m : p["marginals"]) c.marginals.push_back(parse_marginal(m, "problem.marginals[" + std::to_string(i++) + "]"));
    }
    c.k = get<int>(p, "problem", "k", static_cast<int>(c.marginals.size()));
    if (c.k < 2) throw ConfigError("problem.k: must be at least 2");
    if (!p.contains("marginals") && c.k != 3) {
      c.marginals.assign(c.k, MarginalSpec{});
    }
    if (static_cast<int>(c.marginals.size()) != c.k) throw ConfigError("problem.marginals: expected k entries");
    if (p.contains("cost")) {
      const json& cj = p["cost"];
      reject_unknown(cj, "problem.cost", {"type", "alpha", "scale"});
      try {
        c.cost.type = cost_type_from_string(get<std::string>(cj, "problem.cost", "type", to_string(c.cost.type)));
      } catch (const ValidationError& e) {
        throw ConfigError(std::string("problem.cost.type: ") + e.what());
      }
      c.cost.scale = get<double>(cj, "problem.cost", "scale", c.cost.scale);
      c.alpha = get<double>(cj, "problem.cost", "alpha", c.alpha);
      if (!(c.cost.scale > 0.0)) throw ConfigError("problem.cost.scale: must be positive");
      if (!(c.alpha >= 0.0)) throw ConfigError("problem.cost.alpha: must be nonnegative");
    }
    if (p.contains("source")) {
      const json& s = p["source"];
      reject_unknown(s, "problem.source", {"type", "nu", "point", "mass"});
      c.source.type = get<std::string>(s, "problem.source", "type", c.source.type);
      if (c.source.type != "diagonal" && c.source.type != "delta" && c.source.type != "explicit")
        throw ConfigError("problem.source.type: expected diagonal, delta or explicit");
      if (s.contains("nu")) c.source.nu = parse_marginal(s["nu"], "problem.source.nu");
      c.source.point = get<std::vector<int>>(s, "problem.source", "point", {});
      c.source.mass = get<std::vector<double>>(s, "problem.source", "mass", {});
    }
  }
  c.grid.k = c.k;

  if (j.contains("grid")) {
    const json& g = j["grid"];
    reject_unknown(g, "grid", {"n_t", "n_x", "scaling_mode"});
    c.grid.n_t = get<int>(g, "grid", "n_t", c.grid.n_t);
    c.grid.n_x = get<int>(g, "grid", "n_x", c.grid.n_x);
    try {
      c.grid.scaling = scaling_mode_from_string(get<std::string>(g, "grid", "scaling_mode", to_string(c.grid.scaling)));
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("grid.scaling_mode: ") + e.what());
    }
  }
  if (c.grid.n_t < 1) throw ConfigError("grid.n_t: must be at least 1");
  if (c.grid.n_x < 2) throw ConfigError("grid.n_x: must be at least 2");

  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, "solver", {"theta", "sigma", "tau", "iterations", "projection_tol", "max_inner_iterations",
                                 "enforce_step_rule", "free_initial", "log_every", "seed", "threads"});
    c.solver.theta = get<double>(s, "solver", "theta", c.solver.theta);
    c.solver.sigma = get<double>(s, "solver", "sigma", c.solver.sigma);
    c.solver.tau = get<double>(s, "solver", "tau", c.solver.tau);
    c.solver.iterations = get<int>(s, "solver", "iterations", c.solver.iterations);
    c.solver.log_every = get<int>(s, "solver", "log_every", c.solver.log_every);
    c.solver.enforce_step_rule = get<bool>(s, "solver", "enforce_step_rule", c.solver.enforce_step_rule);
    c.solver.seed = get<std::uint64_t>(s, "solver", "seed", c.solver.seed);
    c.solver.threads = get<int>(s, "solver", "threads", c.solver.threads);
    c.constraints.projection_tol = get<double>(s, "solver", "projection_tol", c.constraints.projection_tol);
    c.constraints.max_inner_iterations =
        get<std::size_t>(s, "solver", "max_inner_iterations", c.constraints.max_inner_iterations);
    c.constraints.free_initial = get<bool>(s, "solver", "free_initial", c.constraints.free_initial);
  }
  if (!(c.solver.theta >= 0.0 && c.solver.theta <= 1.0)) throw ConfigError("solver.theta: must lie in [0, 1]");
  if (!(c.solver.sigma > 0.0)) throw ConfigError("solver.sigma: must be positive");
  if (!(c.solver.tau > 0.0)) throw ConfigError("solver.tau: must be positive");
  if (c.solver.iterations < 0) throw ConfigError("solver.iterations: must be nonnegative");
  if (c.solver.log_every < 1) throw ConfigError("solver.log_every: must be positive");
  if (c.solver.threads < 1) throw ConfigError("solver.threads: must be positive");
  if (!(c.constraints.projection_tol > 0.0)) throw ConfigError("solver.projection_tol: must be positive");

  if (j.contains("diffusion")) {
    reject_unknown(j["diffusion"], "diffusion", {"epsilon"});
    c.constraints.diffusion = get<double>(j["diffusion"], "diffusion", "epsilon", 0.0);
    if (!(c.constraints.diffusion >= 0.0)) throw ConfigError("diffusion.epsilon: must be nonnegative");
  }
  if (j.contains("output")) {
    reject_unknown(j["output"], "output", {"directory"});
    c.output_directory = get<std::string>(j["output"], "output", "directory", c.output_directory);
  }
  if (j.contains("analysis")) {
    reject_unknown(j["analysis"], "analysis", {"condition_on"});
    const auto mode = get<std::string>(j["analysis"], "analysis", "condition_on", "row_marginal");
    if (mode == "row_marginal") {
      c.condition_on = Conditioning::row_marginal;
    } else if (mode == "target_mu1") {
      c.condition_on = Conditioning::target_mu1;
    } else {
      throw ConfigError("analysis.condition_on: expected row_marginal or target_mu1");
    }
  }
  if (j.contains("check")) {
    reject_unknown(j["check"], "check", {"tolerance"});
    c.check_tolerance = get<double>(j["check"], "check", "tolerance", c.check_tolerance);
    if (!(c.check_tolerance >= 0.0)) throw ConfigError("check.tolerance: must be nonnegative");
  }

  // Resolve measures now so that size errors surface as config errors.
  build_marginals(c);
  build_source(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  // A run manifest embeds its resolved config under "config".
  if (j.contains("config") && j["config"].is_object() && j.contains("manifest_version")) j = j["config"];
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json marg = json::array();
  for (const auto& m : c.marginals) marg.push_back(marginal_json(m));
  json src{{"type", c.source.type}};
  if (c.source.type == "diagonal") src["nu"] = marginal_json(c.source.nu);
  if (c.source.type == "delta") src["point"] = c.source.point;
  if (c.source.type == "explicit") src["mass"] = c.source.mass;
  return json{
      {"problem",
       {{"k", c.k},
        {"cost", {{"type", to_string(c.cost.type)}, {"scale", c.cost.scale}, {"alpha", c.alpha}}},
        {"marginals", marg},
        {"source", src}}},
      {"grid", {{"n_t", c.grid.n_t}, {"n_x", c.grid.n_x}, {"scaling_mode", to_string(c.grid.scaling)}}},
      {"solver",
       {{"theta", c.solver.theta},
        {"sigma", c.solver.sigma},
        {"tau", c.solver.tau},
        {"iterations", c.solver.iterations},
        {"projection_tol", c.constraints.projection_tol},
        {"max_inner_iterations", c.constraints.max_inner_iterations},
        {"enforce_step_rule", c.solver.enforce_step_rule},
        {"free_initial", c.constraints.free_initial},
        {"log_every", c.solver.log_every},
        {"seed", c.solver.seed},
        {"threads", c.solver.threads}}},
      {"diffusion", {{"epsilon", c.constraints.diffusion}}},
      {"output", {{"directory", c.output_directory}}},
      {"analysis",
       {{"condition_on", c.condition_on == Conditioning::row_marginal ? "row_marginal" : "target_mu1"}}},
      {"check", {{"tolerance", c.check_tolerance}}},
  };
}

std::vector<DiscreteMeasure> build_marginals(const RunConfig& c) {
  std::vector<DiscreteMeasure> out;
  for (std::size_t i = 0; i < c.marginals.size(); ++i)
    out.push_back(realize(c.marginals[i], c.grid.n_x, "problem.marginals[" + std::to_string(i) + "]"));
  return out;
}

DiscreteMeasure build_source(const RunConfig& c) {
  SourceSpec spec;
  if (c.source.type == "diagonal") {
    spec = SourceSpec::diagonal(realize(c.source.nu, c.grid.n_x, "problem.source.nu"));
  } else if (c.source.type == "delta") {
    spec = SourceSpec::delta(c.source.point.empty() ? std::vector<int>(c.k, 0) : c.source.point);
  } else {
    std::size_t size = c.grid.points();
    if (c.source.mass.size() != size) throw ConfigError("problem.source.mass: expected n_x^k entries");
    DiscreteMeasure m(c.grid.n_x, c.k, c.source.mass);
    if (!(m.total() > 0.0)) throw ConfigError("problem.source.mass: no mass");
    m.normalize();
    spec = SourceSpec::explicit_measure(m);
  }
  try {
    return realize_source(spec, c.grid);
  } catch (const Error& e) {
    throw ConfigError(std::string("problem.source: ") + e.what());
  }
}

ConstraintSystem build_constraints(const RunConfig& c) {
  return ConstraintSystem(c.grid, build_marginals(c), build_source(c), c.constraints);
}

}  // namespace mmot
