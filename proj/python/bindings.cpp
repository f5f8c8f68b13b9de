#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmot/analysis.hpp"
#include "mmot/config.hpp"
#include "mmot/cost.hpp"
#include "mmot/errors.hpp"
#include "mmot/oracle.hpp"
#include "mmot/pipeline.hpp"
#include "mmot/solver.hpp"

namespace py = pybind11;
using namespace mmot;
using nlohmann::json;

namespace {

std::vector<DiscreteMeasure> measures(const std::vector<std::vector<double>>& masses) {
  std::vector<DiscreteMeasure> out;
  for (const auto& m : masses) {
    DiscreteMeasure mu(static_cast<int>(m.size()), 1, m);
    mu.normalize();
    out.push_back(mu);
  }
  return out;
}

CostKind cost_kind(const std::string& type, double scale) { return CostKind{cost_type_from_string(type), scale}; }

py::array_t<double> as_array(const DiscreteMeasure& m) {
  std::vector<py::ssize_t> shape(m.dims, m.n_x);
  py::array_t<double> a(shape);
  std::copy(m.mass.begin(), m.mass.end(), a.mutable_data());
  return a;
}

std::string solve_json(const std::string& config_text) {
  const RunConfig c = parse_config(json::parse(config_text));
  const ConstraintSystem system = build_constraints(c);
  SolveResult r;
  {
    py::gil_scoped_release release;
    r = solve(system, c.cost, c.solver);
  }
  json rows = json::array();
  for (const auto& d : r.diagnostics)
    rows.push_back({{"iteration", d.iteration},
                    {"objective", d.objective},
                    {"continuity_inf", d.continuity_inf},
                    {"marginal_inf", d.marginal_inf},
                    {"source_inf", d.source_inf},
                    {"min_mass", d.min_mass},
                    {"step_norm", d.step_norm}});
  const TerminalCoupling t = terminal_coupling(r.staggered);
  return json{{"objective", solver_objective(r.staggered, c.cost)},
              {"opnorm", r.opnorm},
              {"step_product", r.step_product},
              {"warnings", r.warnings},
              {"diagnostics", rows},
              {"clipped_mass", t.clipped_mass},
              {"n_x", c.grid.n_x},
              {"k", c.grid.k},
              {"coupling", t.coupling.mass}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-marginal dynamical optimal transport";

  auto base = py::register_exception<Error>(m, "MmotError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<DegenerateOutputError>(m, "DegenerateOutputError", base.ptr());
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base.ptr());

  m.def(
      "prox_perspective",
      [](double gamma, double pi, std::vector<double> momentum) {
        const PerspectivePoint p = prox_perspective(gamma, PerspectivePoint{pi, std::move(momentum)});
        return py::make_tuple(p.pi, p.m);
      },
      py::arg("gamma"), py::arg("pi"), py::arg("m"));

  m.def(
      "preset_marginal",
      [](const std::string& name, int n, double delta) { return preset_marginal(preset_from_string(name), n, delta).mass; },
      py::arg("name"), py::arg("n"), py::arg("delta") = 0.2);

  m.def(
      "static_optimum",
      [](const std::vector<std::vector<double>>& marginals, const std::string& cost, double scale) {
        return static_optimum(measures(marginals), cost_kind(cost, scale));
      },
      py::arg("marginals"), py::arg("cost") = "quadratic_pairwise", py::arg("scale") = 1.0);

  m.def(
      "comonotone_coupling",
      [](const std::vector<std::vector<double>>& marginals) {
        const CouplingTable t = comonotone_coupling(measures(marginals));
        py::list atoms;
        for (const auto& a : t.atoms) atoms.append(py::make_tuple(a.coords, a.mass));
        return atoms;
      },
      py::arg("marginals"));

  m.def(
      "analytic_map",
      [](const std::vector<double>& mu1, const std::vector<double>& mul) {
        const auto mus = measures({mu1, mul});
        const MapTable t = analytic_map(mus[0], mus[1]);
        return py::make_tuple(t.x, t.value);
      },
      py::arg("mu1"), py::arg("mul"));

  m.def("_solve", &solve_json);

  m.def("_run_solve", [](const std::string& config, const std::string& dir, bool force) {
    const RunConfig c = parse_config(json::parse(config));
    py::gil_scoped_release release;
    return pipeline::run_solve(c, dir, force).manifest.dump();
  });
  m.def("_run_compare", [](const std::string& dir) { return pipeline::run_compare(dir).dump(); });
  m.def("_run_check", [](const std::string& path) { return pipeline::run_check(path).to_json().dump(); });
  m.def("_run_oracle", [](const std::string& config, const std::string& dir, bool force) {
    return pipeline::run_oracle(parse_config(json::parse(config)), dir, force).dump();
  });
  m.def("_as_array", [](const std::vector<double>& mass, int n, int k) {
    return as_array(DiscreteMeasure(n, k, mass));
  });
}
