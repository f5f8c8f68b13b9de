#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmot/analysis.hpp"
#include "mmot/duality.hpp"
#include "mmot/grid.hpp"
#include "mmot/measure.hpp"
#include "mmot/oracle.hpp"
#include "mmot/solver.hpp"

namespace mmot::io {

namespace fs = std::filesystem;

/// Shortest round-trip formatting with 17 significant digits.
std::string format_number(double v);

/// Writes `text` to `path`, replacing any existing file.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

std::string diagnostics_csv(const SolverDiagnostics& rows);

/// Dense coupling, one row per cell: i1..ik, mass.
std::string coupling_csv(const DiscreteMeasure& coupling);

/// Staggered snapshots: t, index, <component>.
std::string pi_csv(const StaggeredField& u);
std::string momentum_csv(const StaggeredField& u, int l);
StaggeredField read_staggered(const fs::path& pi_path, const std::vector<fs::path>& momentum_paths,
                              const GridSpec& grid);

std::string map_csv(const MapTable& map);

/// Potentials CSV: kind, slot, index, value. Rows with kind "lambda" carry
/// the time index in `slot`; rows with kind "marginal" carry the axis.
std::string potentials_csv(const DualPotentials& p);
DualPotentials read_potentials(const fs::path& path, const GridSpec& grid);

struct MapPanel {
  int target = 2;
  MapEstimate estimate;
  MapTable reference;
};

/// Self-contained SVG with one panel per target map.
std::string maps_svg(const std::vector<MapPanel>& panels);

}  // namespace mmot::io
