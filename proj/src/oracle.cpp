#include "mmot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmot/errors.hpp"

namespace mmot {

std::string to_string(Preset p) {
  switch (p) {
    case Preset::sine_bump: return "sine_bump";
    case Preset::tent: return "tent";
    case Preset::double_tent: return "double_tent";
    case Preset::uniform: return "uniform";
  }
  return "uniform";
}

Preset preset_from_string(const std::string& name) {
  if (name == "sine_bump") return Preset::sine_bump;
  if (name == "tent") return Preset::tent;
  if (name == "double_tent") return Preset::double_tent;
  if (name == "uniform") return Preset::uniform;
  throw ValidationError("unknown preset '" + name + "'");
}

double preset_density(Preset p, double x, double delta) {
  if (delta < 0.0) throw ParameterError("preset delta must be nonnegative");
  if (x < 0.0 || x > 1.0) return 0.0;
  switch (p) {
    case Preset::sine_bump:
      return (0.5 * std::numbers::pi * std::sin(std::numbers::pi * x) + delta) / (1.0 + delta);
    case Preset::tent:
      return x < 0.5 ? 4.0 * x : 4.0 * (1.0 - x);
    case Preset::double_tent:
      if (x < 0.25) return 8.0 * x;
      if (x < 0.5) return 4.0 - 8.0 * x;
      if (x < 0.75) return 8.0 * x - 4.0;
      return 8.0 - 8.0 * x;
    case Preset::uniform:
      return 1.0;
  }
  return 0.0;
}

DiscreteMeasure preset_marginal(Preset p, int n_x, double delta) {
  if (n_x < 1) throw ValidationError("preset grid needs at least one cell");
  DiscreteMeasure mu(n_x, 1);
  for (int j = 0; j < n_x; ++j) mu.mass[j] = preset_density(p, static_cast<double>(j) / n_x, delta) / n_x;
  if (!(mu.total() > 0.0)) throw ValidationError("preset has no mass on this grid");
  mu.normalize();
  return mu;
}

double Cdf1D::operator()(double x) const {
  if (x <= breakpoints.front()) return values.front();
  if (x >= breakpoints.back()) return values.back();
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - breakpoints.begin());
  const double w = (x - breakpoints[j - 1]) / (breakpoints[j] - breakpoints[j - 1]);
  return values[j - 1] + w * (values[j] - values[j - 1]);
}

Cdf1D cdf(const DiscreteMeasure& mu) {
  if (mu.dims != 1) throw DimensionError("cdf needs a 1D measure");
  mu.validate(1e-10);
  const int n = mu.n_x;
  Cdf1D c;
  c.breakpoints.resize(n + 1);
  c.values.resize(n + 1);
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    c.breakpoints[j] = static_cast<double>(j) / n;
    c.values[j] = acc;
    if (j < n) acc += mu.mass[j];
  }
  c.values[n] = 1.0;
  return c;
}

double quantile(const Cdf1D& c, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  const auto it = std::lower_bound(c.values.begin(), c.values.end(), q);
  std::size_t j = static_cast<std::size_t>(it - c.values.begin());
  if (j == 0) return c.breakpoints.front();
  if (j >= c.values.size()) return c.breakpoints.back();
  const double lo = c.values[j - 1];
  const double hi = c.values[j];
  const double w = (q - lo) / (hi - lo);
  return c.breakpoints[j - 1] + w * (c.breakpoints[j] - c.breakpoints[j - 1]);
}

MapTable analytic_map(const DiscreteMeasure& mu1, const DiscreteMeasure& mul) {
  if (mu1.n_x != mul.n_x) throw DimensionError("maps need marginals on a common grid");
  const Cdf1D f1 = cdf(mu1);
  const Cdf1D fl = cdf(mul);
  MapTable t;
  for (int j = 0; j < mu1.n_x; ++j) {
    t.x.push_back(f1.breakpoints[j]);
    t.value.push_back(quantile(fl, std::clamp(f1.values[j], 0.0, 1.0)));
  }
  return t;
}

CouplingTable comonotone_coupling(std::span<const DiscreteMeasure> marginals) {
  if (marginals.empty()) throw ValidationError("coupling needs at least one marginal");
  const int k = static_cast<int>(marginals.size());
  const int n = marginals[0].n_x;
  std::vector<std::vector<double>> cum(k);
  std::vector<double> levels{0.0, 1.0};
  for (int l = 0; l < k; ++l) {
    const auto& mu = marginals[l];
    if (mu.dims != 1 || mu.n_x != n) throw DimensionError("marginals must be 1D on a common grid");
    mu.validate(1e-10);
    cum[l].assign(n + 1, 0.0);
    for (int j = 0; j < n; ++j) cum[l][j + 1] = cum[l][j] + mu.mass[j];
    cum[l][n] = 1.0;
    for (int j = 1; j < n; ++j) levels.push_back(cum[l][j]);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  CouplingTable out;
  out.k = k;
  out.n_x = n;
  std::vector<int> idx(k, 0);
  for (std::size_t s = 0; s + 1 < levels.size(); ++s) {
    const double q0 = levels[s];
    const double q1 = levels[s + 1];
    if (!(q1 > q0)) continue;
    const double mid = 0.5 * (q0 + q1);
    for (int l = 0; l < k; ++l) {
      // Cell j of axis l holds levels [cum_j, cum_{j+1}).
      const auto it = std::upper_bound(cum[l].begin(), cum[l].end(), mid);
      idx[l] = std::clamp(static_cast<int>(it - cum[l].begin()) - 1, 0, n - 1);
    }
    if (!out.atoms.empty() && out.atoms.back().coords == idx) {
      out.atoms.back().mass += q1 - q0;
    } else {
      out.atoms.push_back(Atom{idx, q1 - q0});
    }
  }
  return out;
}

double static_optimum(std::span<const DiscreteMeasure> marginals, const CostKind& cost) {
  return static_cost(comonotone_coupling(marginals), cost);
}

std::vector<std::vector<double>> static_dual_potentials(std::span<const DiscreteMeasure> marginals,
                                                        const CostKind& cost) {
  if (marginals.size() != 2) throw ValidationError("static dual potentials are available for k = 2 only");
  const int n = marginals[0].n_x;
  const CouplingTable gamma = comonotone_coupling(marginals);
  auto c = [&](int i, int j) {
    const double v[2] = {static_cast<double>(i) / n, static_cast<double>(j) / n};
    return cost.evaluate(v);
  };

  // lambda_1 is the shortest-path distance in the graph with edges
  // x' -> x of weight c(x, y') - c(x', y') for every support pair (x', y').
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, inf);
  d[gamma.atoms.front().coords[0]] = 0.0;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (const auto& a : gamma.atoms) {
      const int xs = a.coords[0];
      const int ys = a.coords[1];
      if (!std::isfinite(d[xs])) continue;
      for (int x = 0; x < n; ++x) {
        const double cand = d[xs] + c(x, ys) - c(xs, ys);
        if (cand < d[x] - 1e-15) {
          d[x] = cand;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  std::vector<double> psi(n, inf);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) psi[y] = std::min(psi[y], c(x, y) - d[x]);
  return {d, psi};
}

}  // namespace mmot
