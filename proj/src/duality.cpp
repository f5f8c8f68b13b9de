#include "mmot/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Finite differences of f on the box grid along integer direction d, at the
// point c. Returns false when no neighbour exists.
bool directional(std::span<const double> f, const GridSpec& g, const std::vector<int>& c,
                 const std::vector<int>& d, double& out) {
  std::vector<int> fwd(c), bwd(c);
  bool has_f = true, has_b = true;
  for (int l = 0; l < g.k; ++l) {
    fwd[l] += d[l];
    bwd[l] -= d[l];
    has_f = has_f && fwd[l] >= 0 && fwd[l] < g.n_x;
    has_b = has_b && bwd[l] >= 0 && bwd[l] < g.n_x;
  }
  const double h = 1.0 / g.n_x;
  const double here = f[g.flat(c)];
  if (has_f && has_b) {
    out = (f[g.flat(fwd)] - f[g.flat(bwd)]) / (2.0 * h);
  } else if (has_f) {
    out = (f[g.flat(fwd)] - here) / h;
  } else if (has_b) {
    out = (here - f[g.flat(bwd)]) / h;
  } else {
    return false;
  }
  return true;
}

// Derivative along d built from axis one-sided differences.
double axis_fallback(std::span<const double> f, const GridSpec& g, const std::vector<int>& c,
                     const std::vector<int>& d) {
  double s = 0.0;
  std::vector<int> e(g.k, 0);
  for (int l = 0; l < g.k; ++l) {
    if (d[l] == 0) continue;
    std::fill(e.begin(), e.end(), 0);
    e[l] = 1;
    double v = 0.0;
    directional(f, g, c, e, v);
    s += d[l] * v;
  }
  return s;
}

// Gradient split into its derivative along the diagonal and the component
// orthogonal to the diagonal.
void gradient(std::span<const double> f, const GridSpec& g, const std::vector<int>& c, double& along,
              std::vector<double>& ortho) {
  const int k = g.k;
  std::vector<int> d(k, 1);
  double d0 = 0.0;
  if (!directional(f, g, c, d, d0)) d0 = axis_fallback(f, g, c, d);
  along = d0;
  // ortho_j - ortho_{j+1} = derivative along e_j - e_{j+1}, sum(ortho) = 0.
  ortho.assign(k, 0.0);
  for (int j = 0; j + 1 < k; ++j) {
    std::fill(d.begin(), d.end(), 0);
    d[j] = 1;
    d[j + 1] = -1;
    double dj = 0.0;
    if (!directional(f, g, c, d, dj)) dj = axis_fallback(f, g, c, d);
    ortho[j + 1] = ortho[j] - dj;
  }
  double mean = 0.0;
  for (double v : ortho) mean += v;
  mean /= k;
  for (double& v : ortho) v -= mean;
}

}  // namespace

DualPotentials::DualPotentials(const GridSpec& g)
    : grid(g),
      lambda_t(static_cast<std::size_t>(g.n_t + 1) * g.points(), 0.0),
      lambda_l(g.k, std::vector<double>(g.n_x, 0.0)) {
  g.validate();
}

std::span<double> DualPotentials::slice(int t) {
  return std::span<double>(lambda_t).subspan(static_cast<std::size_t>(t) * grid.points(), grid.points());
}

std::span<const double> DualPotentials::slice(int t) const {
  return std::span<const double>(lambda_t).subspan(static_cast<std::size_t>(t) * grid.points(), grid.points());
}

double legendre(const CostKind& cost, std::span<const double> y) {
  const double c = cost.scale;
  if (!(c > 0.0)) throw ParameterError("cost scale must be positive");
  const std::size_t k = y.size();
  double yy = 0.0, s = 0.0;
  for (double v : y) {
    yy += v * v;
    s += v;
  }
  if (cost.type == CostType::quadratic_full) return 0.5 * yy / c;
  // Q = k I - 11^T, Q^+ = (I - 11^T / k) / k on the complement of the diagonal.
  if (std::abs(s) > 1e-10 * std::max(1.0, std::sqrt(yy * k))) return kInf;
  const double quad = (yy - s * s / k) / k;
  return 0.25 * quad / c;
}

double hj_residual(const DualPotentials& p, const CostKind& cost) {
  const GridSpec& g = p.grid;
  const std::size_t n = g.points();
  std::vector<double> avg(n);
  std::vector<double> ortho;
  double worst = -kInf;
  for (int t = 0; t < g.n_t; ++t) {
    const auto lo = p.slice(t);
    const auto hi = p.slice(t + 1);
    for (std::size_t x = 0; x < n; ++x) avg[x] = 0.5 * (lo[x] + hi[x]);
    for (std::size_t x = 0; x < n; ++x) {
      const auto c = g.coords(x);
      double along = 0.0;
      gradient(avg, g, c, along, ortho);
      for (double& v : ortho) v += along / g.k;
      worst = std::max(worst, g.n_t * (hi[x] - lo[x]) + legendre(cost, ortho));
    }
  }
  return worst;
}

double restore_hj_feasibility(DualPotentials& p, const CostKind& cost) {
  const double r = std::max(0.0, hj_residual(p, cost));
  if (r == 0.0 || !std::isfinite(r)) return r;
  for (int t = 0; t <= p.grid.n_t; ++t) {
    const double shift = r * t / p.grid.n_t;
    for (double& v : p.slice(t)) v -= shift;
  }
  for (double& v : p.lambda_l[0]) v -= r;
  return r;
}

double domination_check(const DualPotentials& p, std::span<const DiscreteMeasure> marginals) {
  const GridSpec& g = p.grid;
  if (static_cast<int>(marginals.size()) != g.k) throw ValidationError("need k marginals");
  const auto last = p.slice(g.n_t);
  double worst = -kInf;
  for (std::size_t x = 0; x < g.points(); ++x) {
    const auto c = g.coords(x);
    double mass = 1.0, s = 0.0;
    for (int l = 0; l < g.k; ++l) {
      mass *= marginals[l].mass[c[l]];
      s += p.lambda_l[l][c[l]];
    }
    if (mass > 0.0) worst = std::max(worst, s - last[x]);
  }
  return worst;
}

double dual_objective(const DualPotentials& p, std::span<const DiscreteMeasure> marginals,
                      const DiscreteMeasure& source) {
  const GridSpec& g = p.grid;
  if (static_cast<int>(marginals.size()) != g.k) throw ValidationError("need k marginals");
  if (source.mass.size() != g.points()) throw DimensionError("source does not match the grid");
  double v = 0.0;
  for (int l = 0; l < g.k; ++l)
    for (int j = 0; j < g.n_x; ++j) v += p.lambda_l[l][j] * marginals[l].mass[j];
  const auto first = p.slice(0);
  for (std::size_t x = 0; x < g.points(); ++x) v -= first[x] * source.mass[x];
  return v;
}

std::vector<double> hopf_lax_lift(std::span<const double> lambda0, const CostKind& cost, double t,
                                  const GridSpec& g) {
  if (!(t > 0.0)) throw ParameterError("Hopf-Lax time must be positive");
  const std::size_t n = g.points();
  if (lambda0.size() != n) throw DimensionError("lambda0 does not match the grid");
  const double h = 1.0 / g.n_x;
  std::vector<double> out(lambda0.begin(), lambda0.end());

  if (cost.type == CostType::quadratic_full) {
    // t L((y - x)/t) = scale |y - x|^2 / (2t) separates over axes.
    const double w = cost.scale / (2.0 * t);
    std::vector<double> line(g.n_x), res(g.n_x);
    for (int l = 0; l < g.k; ++l) {
      const std::size_t stride = g.stride(l);
      for (std::size_t x = 0; x < n; ++x) {
        if ((x / stride) % g.n_x != 0) continue;
        for (int j = 0; j < g.n_x; ++j) line[j] = out[x + j * stride];
        for (int j = 0; j < g.n_x; ++j) {
          double best = kInf;
          for (int i = 0; i < g.n_x; ++i) {
            const double d = (j - i) * h;
            best = std::min(best, line[i] + w * d * d);
          }
          res[j] = best;
        }
        for (int j = 0; j < g.n_x; ++j) out[x + j * stride] = res[j];
      }
    }
    return out;
  }

  std::vector<double> v(g.k);
  for (std::size_t y = 0; y < n; ++y) {
    const auto cy = g.coords(y);
    double best = kInf;
    for (std::size_t x = 0; x < n; ++x) {
      const auto cx = g.coords(x);
      for (int l = 0; l < g.k; ++l) v[l] = (cy[l] - cx[l]) * h / t;
      best = std::min(best, lambda0[x] + t * cost.evaluate(v));
    }
    out[y] = best;
  }
  return out;
}

DualPotentials lift_static_duals(const std::vector<std::vector<double>>& lambda_l, const CostKind& cost,
                                 const GridSpec& g) {
  if (static_cast<int>(lambda_l.size()) != g.k) throw ValidationError("need k static potentials");
  DualPotentials p(g);
  p.lambda_l = lambda_l;
  const std::size_t n = g.points();
  const double h = 1.0 / g.n_x;
  std::vector<double> sum(n);
  for (std::size_t z = 0; z < n; ++z) {
    const auto c = g.coords(z);
    double s = 0.0;
    for (int l = 0; l < g.k; ++l) s += lambda_l[l].at(c[l]);
    sum[z] = s;
  }
  auto first = p.slice(0);
  std::vector<double> v(g.k);
  for (std::size_t x = 0; x < n; ++x) {
    const auto cx = g.coords(x);
    double best = -kInf;
    for (std::size_t z = 0; z < n; ++z) {
      const auto cz = g.coords(z);
      for (int l = 0; l < g.k; ++l) v[l] = (cz[l] - cx[l]) * h;
      best = std::max(best, sum[z] - cost.evaluate(v));
    }
    first[x] = best;
  }
  const std::vector<double> base(first.begin(), first.end());
  for (int i = 1; i <= g.n_t; ++i) {
    const auto lifted = hopf_lax_lift(base, cost, static_cast<double>(i) / g.n_t, g);
    std::copy(lifted.begin(), lifted.end(), p.slice(i).begin());
  }
  return p;
}

}  // namespace mmot
