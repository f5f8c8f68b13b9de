#include "mmot/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "mmot/errors.hpp"
#include "mmot/vec.hpp"

namespace mmot {

namespace {

template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  if (threads <= 1 || n < 1024) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t parts = static_cast<std::size_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(parts - 1);
  const std::size_t chunk = (n + parts - 1) / parts;
  for (std::size_t p = 1; p < parts; ++p) {
    const std::size_t lo = std::min(n, p * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo < hi) pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

// prox of sigma (w J)^* is w times the prox of (sigma / w) J^* at g / w.
void prox_dual_cells(std::span<double> g, const GridSpec& grid, int channels, double sigma, double weight,
                     int threads) {
  const std::size_t n = grid.centered_slots();
  const double inv = 1.0 / weight;
  parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> m(channels);
    for (std::size_t i = lo; i < hi; ++i) {
      double pi = g[i] * inv;
      for (int c = 0; c < channels; ++c) m[c] = g[(c + 1) * n + i] * inv;
      prox_conjugate_inplace(sigma * inv, pi, m);
      g[i] = pi * weight;
      for (int c = 0; c < channels; ++c) g[(c + 1) * n + i] = m[c] * weight;
    }
  });
}

}  // namespace

void SolverParams::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in [0, 1]");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("tau must be positive");
  if (iterations < 0) throw ParameterError("iterations must be nonnegative");
  if (log_every < 1) throw ParameterError("log_every must be positive");
  if (threads < 1) throw ParameterError("threads must be positive");
}

OpNormEstimate estimate_opnorm(const LinearOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) throw ParameterError("estimate_opnorm: trials must be at least 1");
  OpNormEstimate best;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(op.input_size), y(op.output_size), z(op.input_size);
  for (int trial = 0; trial < trials; ++trial) {
    for (double& v : x) v = normal(rng);
    double nx = vec::norm2(x);
    if (nx == 0.0) continue;
    for (double& v : x) v /= nx;
    OpNormEstimate est;
    double rq_prev = 0.0;
    for (int it = 0; it < 200; ++it) {
      op.apply(x, y);
      const double rq = vec::dot(y, y);
      est.history.push_back(std::sqrt(rq));
      est.value = std::max(est.value, std::sqrt(rq));
      if (rq == 0.0) break;
      op.adjoint(y, z);
      const double nz = vec::norm2(z);
      if (nz == 0.0) break;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] / nz;
      if (it > 0 && std::abs(rq - rq_prev) <= 1e-10 * rq) break;
      rq_prev = rq;
    }
    if (est.value > best.value || best.history.empty()) best = std::move(est);
  }
  return best;
}

CouplingOperator::CouplingOperator(const GridSpec& grid, const CostKind& cost)
    : grid_(grid), cost_(cost), unit_{cost.type, 1.0}, channels_(cost.channels(grid.k)) {
  grid_.validate();
  if (!(cost_.scale > 0.0)) throw ParameterError("cost scale must be positive");
  const std::size_t n = grid_.points();
  prev_.assign(grid_.k, std::vector<std::size_t>(n));
  for (int l = 0; l < grid_.k; ++l)
    for (std::size_t x = 0; x < n; ++x) prev_[l][x] = grid_.shift(x, l, -1);
}

void CouplingOperator::apply_into(const StaggeredField& u, std::span<double> out) const {
  const GridSpec& g = grid_;
  const std::size_t n = g.points();
  const std::size_t cells = g.centered_slots();
  const auto ps = u.pi();
  for (std::size_t i = 0; i < cells; ++i) out[i] = 0.5 * (ps[i] + ps[i + n]);
  std::vector<double> m(g.k), ch(channels_);
  for (int t = 0; t < g.n_t; ++t) {
    for (std::size_t x = 0; x < n; ++x) {
      for (int l = 0; l < g.k; ++l) {
        const auto ms = u.momentum_slice(l, t);
        m[l] = 0.5 * (ms[x] + ms[prev_[l][x]]);
      }
      unit_.apply_channels(m, ch);
      const std::size_t i = static_cast<std::size_t>(t) * n + x;
      for (int c = 0; c < channels_; ++c) out[(c + 1) * cells + i] = ch[c];
    }
  }
}

void CouplingOperator::adjoint_into(std::span<const double> gv, StaggeredField& out) const {
  const GridSpec& g = grid_;
  const std::size_t n = g.points();
  const std::size_t cells = g.centered_slots();
  std::fill(out.values().begin(), out.values().end(), 0.0);
  auto ps = out.pi();
  for (std::size_t i = 0; i < cells; ++i) {
    ps[i] += 0.5 * gv[i];
    ps[i + n] += 0.5 * gv[i];
  }
  std::vector<double> m(g.k), ch(channels_);
  for (int t = 0; t < g.n_t; ++t) {
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t i = static_cast<std::size_t>(t) * n + x;
      for (int c = 0; c < channels_; ++c) ch[c] = gv[(c + 1) * cells + i];
      std::fill(m.begin(), m.end(), 0.0);
      unit_.apply_channels_adjoint(ch, m);
      for (int l = 0; l < g.k; ++l) {
        auto ms = out.momentum_slice(l, t);
        ms[x] += 0.5 * m[l];
        ms[prev_[l][x]] += 0.5 * m[l];
      }
    }
  }
}

std::vector<double> CouplingOperator::apply(const StaggeredField& u) const {
  check_conforms(u, grid_);
  std::vector<double> out(dual_size(), 0.0);
  apply_into(u, out);
  return out;
}

StaggeredField CouplingOperator::adjoint(std::span<const double> gv) const {
  if (gv.size() != dual_size()) throw DimensionError("dual vector has wrong length");
  StaggeredField out(grid_);
  adjoint_into(gv, out);
  return out;
}

LinearOperator CouplingOperator::as_linear_operator() const {
  LinearOperator op;
  StaggeredField probe(grid_);
  op.input_size = probe.values().size();
  op.output_size = dual_size();
  op.apply = [this](std::span<const double> in, std::span<double> out) {
    StaggeredField u(grid_);
    std::copy(in.begin(), in.end(), u.values().begin());
    apply_into(u, out);
  };
  op.adjoint = [this](std::span<const double> in, std::span<double> out) {
    StaggeredField u(grid_);
    adjoint_into(in, u);
    std::copy(u.values().begin(), u.values().end(), out.begin());
  };
  return op;
}

StaggeredField initial_guess(const ConstraintSystem& c) {
  const GridSpec& g = c.grid();
  const DiscreteMeasure prod = product(c.marginals());
  StaggeredField u(g);
  for (int i = 0; i <= g.n_t; ++i) {
    const double t = static_cast<double>(i) / g.n_t;
    auto slice = u.pi_slice(i);
    for (std::size_t x = 0; x < g.points(); ++x) slice[x] = (1.0 - t) * c.source().mass[x] + t * prod.mass[x];
  }
  return project(u, c);
}

SolverState make_state(const ConstraintSystem& c, const CouplingOperator& k, const StaggeredField& init) {
  check_conforms(init, c.grid());
  if (!(k.grid() == c.grid())) throw DimensionError("coupling operator and constraints use different grids");
  SolverState s;
  s.h = init;
  s.f = init;
  s.g.assign(k.dual_size(), 0.0);
  return s;
}

SolverState pd_step(const SolverState& state, const SolverParams& params, const ConstraintSystem& c,
                    const CouplingOperator& k) {
  const GridSpec& grid = c.grid();
  check_conforms(state.h, grid);
  check_conforms(state.f, grid);
  if (state.g.size() != k.dual_size()) throw DimensionError("dual iterate has wrong length");

  SolverState next;
  next.iteration = state.iteration + 1;
  next.multiplier = state.multiplier;

  next.g = k.apply(state.f);
  for (std::size_t i = 0; i < next.g.size(); ++i) next.g[i] = state.g[i] + params.sigma * next.g[i];
  prox_dual_cells(next.g, grid, k.channels(), params.sigma, k.cost().scale, params.threads);

  StaggeredField w(grid);
  k.adjoint_into(next.g, w);
  auto wv = w.values();
  const auto hv = state.h.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = hv[i] - params.tau * wv[i];
  next.h = project(w, c, &next.multiplier);

  next.f = StaggeredField(grid);
  auto fv = next.f.values();
  const auto hn = next.h.values();
  double step = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    const double d = hn[i] - hv[i];
    step += d * d;
    fv[i] = hn[i] + params.theta * d;
  }
  next.step_norm = std::sqrt(step);
  return next;
}

SolverState pd_step(const SolverState& state, const SolverParams& params, const ConstraintSystem& c,
                    const CostKind& cost) {
  return pd_step(state, params, c, CouplingOperator(c.grid(), cost));
}

double solver_objective(const StaggeredField& h, const CostKind& cost) {
  return dynamic_cost(interp(h, h.grid()), cost, h.grid(), DomainPolicy::positive_part);
}

SolveResult solve(const ConstraintSystem& c, const CostKind& cost, const SolverParams& params,
                  const std::optional<StaggeredField>& init, const DiagnosticsObserver& observer) {
  params.validate();
  const CouplingOperator k(c.grid(), cost);
  SolveResult result;
  result.opnorm = estimate_opnorm(k.as_linear_operator(), 1, params.seed).value;
  result.step_product = params.sigma * params.tau * result.opnorm * result.opnorm;
  if (result.step_product >= 1.0) {
    std::ostringstream msg;
    msg << "step rule violated: sigma*tau*|K|^2 = " << result.step_product << " (sigma*tau = "
        << params.sigma * params.tau << ", |K| ~ " << result.opnorm << "); convergence is not guaranteed";
    if (params.enforce_step_rule) throw ParameterError(msg.str());
    result.warnings.push_back(msg.str());
  }

  StaggeredField start = init.has_value() ? project(*init, c) : initial_guess(c);
  SolverState state = make_state(c, k, start);
  for (int it = 1; it <= params.iterations; ++it) {
    state = pd_step(state, params, c, k);
    if (it % params.log_every == 0 || it == params.iterations) {
      const ResidualReport r = residual_report(state.h, c);
      DiagnosticsRow row;
      row.iteration = it;
      row.objective = solver_objective(state.h, cost);
      row.continuity_inf = r.continuity_inf;
      row.marginal_inf = r.marginal_inf;
      row.source_inf = r.source_inf;
      row.min_mass = r.min_mass;
      row.step_norm = state.step_norm;
      result.diagnostics.push_back(row);
      if (observer) observer(row);
    }
  }
  result.staggered = state.h;
  result.centered = interp(state.h, c.grid());
  result.state = std::move(state);
  return result;
}

double primal_dual_gap_probe(const SolverState& state, const ConstraintSystem& c, const CostKind& cost,
                             double dual_tol) {
  const GridSpec& grid = c.grid();
  const CouplingOperator k(grid, cost);
  if (state.g.size() != k.dual_size()) throw DimensionError("dual iterate has wrong length");
  const double primal = solver_objective(state.h, cost);
  if (!std::isfinite(primal)) return std::numeric_limits<double>::infinity();

  // The dual value is finite only when every cell lies in the domain of
  // (scale J)*, i.e. a + |b|^2 / (4 scale) <= 0.
  const std::size_t cells = grid.centered_slots();
  for (std::size_t i = 0; i < cells; ++i) {
    double bb = 0.0;
    for (int ch = 0; ch < k.channels(); ++ch) bb += state.g[(ch + 1) * cells + i] * state.g[(ch + 1) * cells + i];
    if (state.g[i] + 0.25 * bb / cost.scale > dual_tol) return std::numeric_limits<double>::infinity();
  }

  // Find w with A^T w = -K^T g in the least-squares sense; the dual value is
  // then -<b, w> provided the residual vanishes.
  StaggeredField v = k.adjoint(state.g);
  for (double& x : v.values()) x = -x;
  const auto av = c.apply(v);
  std::vector<double> w;
  try {
    w = normal_solve(c, av, nullptr);
  } catch (const ConvergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
  const StaggeredField atw = c.apply_adjoint(w);
  double res = 0.0;
  for (std::size_t i = 0; i < v.values().size(); ++i) res = std::max(res, std::abs(v.values()[i] - atw.values()[i]));
  if (res > dual_tol) return std::numeric_limits<double>::infinity();
  const double dual = -vec::dot(c.rhs(), w) * grid.cell_weight();
  return primal - dual;
}

}  // namespace mmot
