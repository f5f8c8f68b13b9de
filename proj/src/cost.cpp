#include "mmot/cost.hpp"

#include <cmath>
#include <limits>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mass component of the perspective prox: largest root of
// f(x) = (x - a)(x + 2g)^2 - g M, or 0 when that root is not positive.
double prox_mass(double gamma, double a, double M) {
  auto f = [&](double x) { return (x - a) * (x + 2.0 * gamma) * (x + 2.0 * gamma) - gamma * M; };
  auto df = [&](double x) {
    const double s = x + 2.0 * gamma;
    return s * s + 2.0 * (x - a) * s;
  };
  const double lo0 = std::max(0.0, a);
  if (M == 0.0) return lo0;
  if (f(lo0) > 0.0) return 0.0;

  // f is increasing and convex on [lo0, inf): safeguarded Newton on the
  // bracket [lo, hi] with f(lo) <= 0 < f(hi).
  double lo = lo0;
  double hi = a + M / (4.0 * gamma) + 1.0;
  while (f(hi) <= 0.0) hi = 2.0 * hi + 1.0;
  double x = hi;
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    (fx < 0.0 ? lo : hi) = x;
    double next = x - fx / df(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(x, 1e-300) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
      return next;
    x = next;
  }
  return x;
}

}  // namespace

std::string to_string(CostType type) {
  return type == CostType::quadratic_pairwise ? "quadratic_pairwise" : "quadratic_full";
}

CostType cost_type_from_string(const std::string& name) {
  if (name == "quadratic_pairwise") return CostType::quadratic_pairwise;
  if (name == "quadratic_full") return CostType::quadratic_full;
  throw ValidationError("unknown cost type '" + name + "'");
}

int CostKind::channels(int k) const {
  return type == CostType::quadratic_pairwise ? k * (k - 1) / 2 : k;
}

double CostKind::evaluate(std::span<const double> v) const {
  double s = 0.0;
  if (type == CostType::quadratic_pairwise) {
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) s += (v[i] - v[j]) * (v[i] - v[j]);
  } else {
    for (double x : v) s += 0.5 * x * x;
  }
  return scale * s;
}

CostFunction CostKind::function() const {
  return [c = *this](std::span<const double> v) { return c.evaluate(v); };
}

void CostKind::apply_channels(std::span<const double> m, std::span<double> out) const {
  const int k = static_cast<int>(m.size());
  if (type == CostType::quadratic_pairwise) {
    const double w = std::sqrt(scale);
    int c = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) out[c++] = w * (m[i] - m[j]);
  } else {
    const double w = std::sqrt(0.5 * scale);
    for (int l = 0; l < k; ++l) out[l] = w * m[l];
  }
}

void CostKind::apply_channels_adjoint(std::span<const double> ch, std::span<double> out) const {
  const int k = static_cast<int>(out.size());
  if (type == CostType::quadratic_pairwise) {
    const double w = std::sqrt(scale);
    int c = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j, ++c) {
        out[i] += w * ch[c];
        out[j] -= w * ch[c];
      }
  } else {
    const double w = std::sqrt(0.5 * scale);
    for (int l = 0; l < k; ++l) out[l] += w * ch[l];
  }
}

double perspective(double pi, std::span<const double> m) {
  double mm = 0.0;
  for (double v : m) mm += v * v;
  if (pi > 0.0) return mm / pi;
  if (pi == 0.0 && mm == 0.0) return 0.0;
  return kInf;
}

double static_cost(const CouplingTable& gamma, const CostFunction& cost) {
  std::vector<double> x(gamma.k);
  double total = 0.0;
  for (const auto& a : gamma.atoms) {
    if (a.mass < 0.0) throw ValidationError("coupling atom has negative mass");
    if (static_cast<int>(a.coords.size()) != gamma.k) throw DimensionError("atom has wrong arity");
    for (int l = 0; l < gamma.k; ++l) x[l] = static_cast<double>(a.coords[l]) / gamma.n_x;
    total += a.mass * cost(x);
  }
  return total;
}

double static_cost(const CouplingTable& gamma, const CostKind& cost) {
  return static_cost(gamma, cost.function());
}

double dynamic_cost(const CenteredField& u, const CostKind& cost, const GridSpec& g, DomainPolicy policy) {
  check_conforms(u, g);
  const int nc = cost.channels(g.k);
  std::vector<double> m(g.k), ch(nc);
  const auto pi = u.pi();
  double total = 0.0;
  for (std::size_t i = 0; i < g.centered_slots(); ++i) {
    for (int l = 0; l < g.k; ++l) m[l] = u.momentum(l)[i];
    cost.apply_channels(m, ch);
    if (policy == DomainPolicy::positive_part && !(pi[i] > 0.0)) continue;
    if (pi[i] == 0.0) {
      // Channels that cancel up to rounding carry no cost at an empty cell.
      double cc = 0.0, mm = 0.0;
      for (double v : ch) cc += v * v;
      for (double v : m) mm += v * v;
      if (cc <= 1e-26 * cost.scale * mm) continue;
    }
    const double j = perspective(pi[i], ch);
    if (std::isinf(j)) return kInf;
    total += j;
  }
  return g.cell_weight() * total;
}

std::vector<double> pairwise_diff(const CenteredField& u) {
  const GridSpec& g = u.grid();
  const std::size_t n = g.centered_slots();
  std::vector<double> out(static_cast<std::size_t>(g.k * (g.k - 1) / 2) * n);
  std::size_t c = 0;
  for (int i = 0; i < g.k; ++i)
    for (int j = i + 1; j < g.k; ++j, ++c) {
      const auto mi = u.momentum(i);
      const auto mj = u.momentum(j);
      for (std::size_t p = 0; p < n; ++p) out[c * n + p] = mi[p] - mj[p];
    }
  return out;
}

CenteredField pairwise_diff_adjoint(std::span<const double> channels, const GridSpec& g) {
  const std::size_t n = g.centered_slots();
  if (channels.size() != static_cast<std::size_t>(g.k * (g.k - 1) / 2) * n)
    throw DimensionError("pair-channel field has wrong size");
  CenteredField out(g);
  std::size_t c = 0;
  for (int i = 0; i < g.k; ++i)
    for (int j = i + 1; j < g.k; ++j, ++c) {
      auto mi = out.momentum(i);
      auto mj = out.momentum(j);
      for (std::size_t p = 0; p < n; ++p) {
        mi[p] += channels[c * n + p];
        mj[p] -= channels[c * n + p];
      }
    }
  return out;
}

void prox_perspective_inplace(double gamma, double& pi, std::span<double> m) {
  if (!(gamma > 0.0)) throw ParameterError("prox_perspective: gamma must be positive");
  double M = 0.0;
  for (double v : m) M += v * v;
  const double x = prox_mass(gamma, pi, M);
  if (x > 0.0) {
    const double f = x / (x + 2.0 * gamma);
    for (double& v : m) v *= f;
    pi = x;
  } else {
    pi = 0.0;
    for (double& v : m) v = 0.0;
  }
}

PerspectivePoint prox_perspective(double gamma, const PerspectivePoint& p) {
  PerspectivePoint out = p;
  prox_perspective_inplace(gamma, out.pi, out.m);
  return out;
}

void prox_conjugate_inplace(double sigma, double& pi, std::span<double> m) {
  if (!(sigma > 0.0)) throw ParameterError("prox_conjugate: sigma must be positive");
  double qp = pi / sigma;
  double buf[64];
  std::vector<double> heap;
  std::span<double> q;
  if (m.size() <= 64) {
    q = std::span<double>(buf, m.size());
  } else {
    heap.resize(m.size());
    q = heap;
  }
  for (std::size_t i = 0; i < m.size(); ++i) q[i] = m[i] / sigma;
  prox_perspective_inplace(1.0 / sigma, qp, q);
  pi -= sigma * qp;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] -= sigma * q[i];
}

PerspectivePoint prox_conjugate(double sigma, const PerspectivePoint& p) {
  PerspectivePoint out = p;
  prox_conjugate_inplace(sigma, out.pi, out.m);
  return out;
}

ShiftedCost semiconvex_shift(const CostFunction& cost, double alpha, std::span<const DiscreteMeasure> marginals) {
  if (alpha < 0.0) throw ParameterError("semiconvex shift: alpha must be nonnegative");
  double corr = 0.0;
  for (const auto& mu : marginals) {
    for (int j = 0; j < static_cast<int>(mu.mass.size()); ++j) {
      const double x = static_cast<double>(j) / mu.n_x;
      corr += x * x * mu.mass[j];
    }
  }
  ShiftedCost out;
  out.correction = 0.5 * alpha * corr;
  if (alpha == 0.0) {
    out.cost = cost;
  } else {
    out.cost = [cost, alpha](std::span<const double> v) {
      double s = 0.0;
      for (double x : v) s += x * x;
      return cost(v) + 0.5 * alpha * s;
    };
  }
  return out;
}

}  // namespace mmot
