#include "mmot/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmot/errors.hpp"

namespace mmot::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("missing artifact '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifactError("artifact '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string diagnostics_csv(const SolverDiagnostics& rows) {
  std::string s = "iteration,objective,continuity_inf,marginal_inf,source_inf,min_mass,step_norm\n";
  for (const auto& r : rows) {
    s += std::to_string(r.iteration) + ',' + format_number(r.objective) + ',' + format_number(r.continuity_inf) +
         ',' + format_number(r.marginal_inf) + ',' + format_number(r.source_inf) + ',' +
         format_number(r.min_mass) + ',' + format_number(r.step_norm) + '\n';
  }
  return s;
}

std::string coupling_csv(const DiscreteMeasure& coupling) {
  std::string s;
  for (int l = 0; l < coupling.dims; ++l) s += "i" + std::to_string(l + 1) + ',';
  s += "mass\n";
  std::vector<int> idx(coupling.dims, 0);
  for (std::size_t f = 0; f < coupling.size(); ++f) {
    std::size_t r = f;
    for (int l = coupling.dims - 1; l >= 0; --l) {
      idx[l] = static_cast<int>(r % coupling.n_x);
      r /= coupling.n_x;
    }
    for (int v : idx) s += std::to_string(v) + ',';
    s += format_number(coupling.mass[f]) + '\n';
  }
  return s;
}

namespace {

std::string slices_csv(const std::string& name, std::span<const double> values, std::size_t n) {
  std::string s = "t,index," + name + "\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    s += std::to_string(i / n) + ',' + std::to_string(i % n) + ',' + format_number(values[i]) + '\n';
  return s;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path, std::size_t columns) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) throw MissingArtifactError("malformed row in '" + path.string() + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_double(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  return std::stod(s);
}

void fill_slices(const fs::path& path, std::span<double> out, std::size_t n) {
  const auto rows = read_rows(path, 3);
  if (rows.size() != out.size()) throw MissingArtifactError("'" + path.string() + "' has the wrong number of rows");
  for (const auto& r : rows) {
    const std::size_t i = std::stoul(r[0]) * n + std::stoul(r[1]);
    if (i >= out.size()) throw MissingArtifactError("index out of range in '" + path.string() + "'");
    out[i] = parse_double(r[2]);
  }
}

}  // namespace

std::string pi_csv(const StaggeredField& u) { return slices_csv("pi_s", u.pi(), u.grid().points()); }

std::string momentum_csv(const StaggeredField& u, int l) {
  return slices_csv("m_s_" + std::to_string(l + 1), u.momentum(l), u.grid().points());
}

StaggeredField read_staggered(const fs::path& pi_path, const std::vector<fs::path>& momentum_paths,
                              const GridSpec& grid) {
  if (static_cast<int>(momentum_paths.size()) != grid.k) throw DimensionError("one momentum file per axis expected");
  StaggeredField u(grid);
  fill_slices(pi_path, u.pi(), grid.points());
  for (int l = 0; l < grid.k; ++l) fill_slices(momentum_paths[l], u.momentum(l), grid.points());
  return u;
}

std::string map_csv(const MapTable& map) {
  std::string s = "x,T\n";
  for (std::size_t i = 0; i < map.x.size(); ++i) s += format_number(map.x[i]) + ',' + format_number(map.value[i]) + '\n';
  return s;
}

std::string potentials_csv(const DualPotentials& p) {
  std::string s = "kind,slot,index,value\n";
  const std::size_t n = p.grid.points();
  for (std::size_t i = 0; i < p.lambda_t.size(); ++i)
    s += "lambda," + std::to_string(i / n) + ',' + std::to_string(i % n) + ',' + format_number(p.lambda_t[i]) + '\n';
  for (std::size_t l = 0; l < p.lambda_l.size(); ++l)
    for (std::size_t j = 0; j < p.lambda_l[l].size(); ++j)
      s += "marginal," + std::to_string(l) + ',' + std::to_string(j) + ',' + format_number(p.lambda_l[l][j]) + '\n';
  return s;
}

DualPotentials read_potentials(const fs::path& path, const GridSpec& grid) {
  DualPotentials p(grid);
  const std::size_t n = grid.points();
  std::size_t seen_t = 0, seen_l = 0;
  for (const auto& r : read_rows(path, 4)) {
    const std::size_t slot = std::stoul(r[1]);
    const std::size_t idx = std::stoul(r[2]);
    const double v = parse_double(r[3]);
    if (r[0] == "lambda") {
      if (slot > static_cast<std::size_t>(grid.n_t) || idx >= n)
        throw MissingArtifactError("potential index out of range in '" + path.string() + "'");
      p.lambda_t[slot * n + idx] = v;
      ++seen_t;
    } else if (r[0] == "marginal") {
      if (slot >= static_cast<std::size_t>(grid.k) || idx >= static_cast<std::size_t>(grid.n_x))
        throw MissingArtifactError("potential index out of range in '" + path.string() + "'");
      p.lambda_l[slot][idx] = v;
      ++seen_l;
    } else {
      throw MissingArtifactError("unknown potential kind '" + r[0] + "' in '" + path.string() + "'");
    }
  }
  if (seen_t != p.lambda_t.size() || seen_l != static_cast<std::size_t>(grid.k) * grid.n_x)
    throw MissingArtifactError("'" + path.string() + "' does not cover the grid");
  return p;
}

std::string maps_svg(const std::vector<MapPanel>& panels) {
  const double size = 320.0, pad = 40.0;
  const double width = panels.size() * (size + pad) + pad;
  const double height = size + 2 * pad;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = pad + p * (size + pad), oy = pad;
    auto px = [&](double x) { return ox + x * size; };
    auto py = [&](double y) { return oy + (1.0 - y) * size; };
    s << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << ox + size / 2 << "\" y=\"" << oy - 12 << "\" text-anchor=\"middle\">map 1 to "
      << panels[p].target << "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double v = tick / 4.0;
      s << "<text x=\"" << px(v) << "\" y=\"" << oy + size + 16 << "\" text-anchor=\"middle\">" << v << "</text>\n";
      s << "<text x=\"" << ox - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
    }
    const auto& ref = panels[p].reference;
    s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ref.x.size(); ++i) s << px(ref.x[i]) << ',' << py(ref.value[i]) << ' ';
    s << "\"/>\n";
    const auto& est = panels[p].estimate;
    for (std::size_t i = 0; i < est.x.size(); ++i) {
      if (!est.valid[i]) continue;
      s << "<circle cx=\"" << px(est.x[i]) << "\" cy=\"" << py(est.value[i])
        << "\" r=\"3.5\" fill=\"#d62728\"/>\n";
    }
    s << "<text x=\"" << ox + 8 << "\" y=\"" << oy + 16 << "\" fill=\"#1f77b4\">analytic</text>\n";
    s << "<text x=\"" << ox + 8 << "\" y=\"" << oy + 30 << "\" fill=\"#d62728\">numerical</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace mmot::io
