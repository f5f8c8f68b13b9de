#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmot/analysis.hpp"
#include "mmot/constraints.hpp"
#include "mmot/cost.hpp"
#include "mmot/flows.hpp"
#include "mmot/grid.hpp"
#include "mmot/solver.hpp"

namespace mmot {

/// A marginal given either by a preset name or by explicit masses.
struct MarginalSpec {
  std::string preset = "uniform";
  double delta = 0.2;
  std::vector<double> mass;  ///< explicit masses; overrides the preset when non-empty
};

struct SourceConfig {
  std::string type = "diagonal";  ///< diagonal | delta | explicit
  MarginalSpec nu;                ///< diagonal
  std::vector<int> point;         ///< delta
  std::vector<double> mass;       ///< explicit, product grid
};

/// Fully resolved run configuration. Defaults reproduce the three-marginal
/// experiment: sine bump, tent and double tent marginals, uniform diagonal
/// source, n_t = n_x = 10, theta = 1, sigma = 85, tau = 0.1, 5000 iterations.
struct RunConfig {
  int k = 3;
  CostKind cost;
  double alpha = 0.0;
  std::vector<MarginalSpec> marginals;
  SourceConfig source;
  GridSpec grid{3, 10, 10, ScalingMode::divided_differences};
  SolverParams solver;
  ConstraintOptions constraints;
  std::string output_directory = "run";
  Conditioning condition_on = Conditioning::row_marginal;
  double check_tolerance = 1e-6;

  RunConfig();
};

/// Parses and validates a JSON config; unknown keys and bad values raise
/// ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

std::vector<DiscreteMeasure> build_marginals(const RunConfig& c);
DiscreteMeasure build_source(const RunConfig& c);
ConstraintSystem build_constraints(const RunConfig& c);

}  // namespace mmot
