#pragma once

#include <filesystem>
#include <optional>

#include "json.hpp"
#include "mmot/config.hpp"
#include "mmot/solver.hpp"

namespace mmot::pipeline {

namespace fs = std::filesystem;

/// Creates `dir`, refusing to reuse a non-empty directory unless `force`.
void prepare_directory(const fs::path& dir, bool force);

struct SolveOutcome {
  SolveResult result;
  nlohmann::json manifest;
};

/// Solves the configured problem and writes manifest.json, diagnostics.csv,
/// coupling.csv, pi_s.csv and m_s_<l>.csv into `dir`. On a solver failure
/// the partial diagnostics and a manifest with status "failed" are written
/// before the error propagates.
SolveOutcome run_solve(const RunConfig& config, const fs::path& dir, bool force = false);

/// Extracts the numerical maps of a finished run, compares them with the
/// monotone rearrangements and writes maps.csv, summary.json and maps.svg.
nlohmann::json run_compare(const fs::path& dir);

struct CheckReport {
  double hj_residual = 0.0;
  double domination_residual = 0.0;
  double dual_objective = 0.0;
  double primal_objective = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool feasible = false;
  nlohmann::json to_json() const;
};

/// Checks dual feasibility of potentials.csv (zero potentials when a run
/// directory has none) against the run described by the neighbouring
/// manifest.json, and writes check.json next to it.
CheckReport run_check(const fs::path& path);

/// Writes the monotone maps map_1_to_<l>.csv, comonotone_coupling.csv,
/// static_optimum.json and manifest.json; for k = 2 also the lifted static
/// potentials in potentials.csv.
nlohmann::json run_oracle(const RunConfig& config, const fs::path& dir, bool force = false);

}  // namespace mmot::pipeline
