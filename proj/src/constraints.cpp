#include "mmot/constraints.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "mmot/errors.hpp"
#include "mmot/vec.hpp"

namespace mmot {

ConstraintSystem::ConstraintSystem(const GridSpec& grid, std::vector<DiscreteMeasure> marginals,
                                   DiscreteMeasure source, ConstraintOptions options)
    : grid_(grid), marginals_(std::move(marginals)), source_(std::move(source)), options_(options) {
  grid_.validate();
  if (static_cast<int>(marginals_.size()) != grid_.k) throw ValidationError("need exactly k marginals");
  for (const auto& mu : marginals_) {
    if (mu.dims != 1 || mu.n_x != grid_.n_x) throw DimensionError("marginal does not live on the 1D grid");
    mu.validate(1e-12);
  }
  if (source_.dims != grid_.k || source_.n_x != grid_.n_x) throw DimensionError("source does not live on the product grid");
  source_.validate(1e-12);
  if (options_.diffusion < 0.0) throw ParameterError("diffusion epsilon must be nonnegative");
  if (!(options_.projection_tol > 0.0)) throw ParameterError("projection tolerance must be positive");

  const std::size_t n = grid_.points();
  prev_.assign(grid_.k, std::vector<std::size_t>(n));
  next_.assign(grid_.k, std::vector<std::size_t>(n));
  for (int l = 0; l < grid_.k; ++l)
    for (std::size_t x = 0; x < n; ++x) {
      prev_[l][x] = grid_.shift(x, l, -1);
      next_[l][x] = grid_.shift(x, l, 1);
    }

  rhs_.assign(rows(), 0.0);
  std::size_t off = continuity_rows();
  for (const auto& mu : marginals_) {
    for (double v : mu.mass) rhs_[off++] = v;
  }
  if (!options_.free_initial) {
    for (double v : source_.mass) rhs_[off++] = v;
  }

  // Continuity rows are translation invariant, so one stencil gives every
  // row norm. Keys index a virtual layout: 0 = pi(t), 1 = pi(t+1), 2+l = m_l.
  std::map<std::pair<int, std::size_t>, double> row;
  const double ct = grid_.time_coef();
  const double cx = grid_.space_coef();
  const std::size_t x0 = 0;
  row[{1, x0}] += ct;
  row[{0, x0}] -= ct;
  for (int l = 0; l < grid_.k; ++l) {
    row[{2 + l, x0}] += cx;
    row[{2 + l, prev_[l][x0]}] -= cx;
  }
  if (options_.diffusion > 0.0) {
    const double w = -options_.diffusion * 0.5 * double(grid_.n_x) * grid_.n_x;
    for (int slice = 0; slice < 2; ++slice)
      for (int l = 0; l < grid_.k; ++l) {
        row[{slice, next_[l][x0]}] += w;
        row[{slice, prev_[l][x0]}] += w;
        row[{slice, x0}] -= 2.0 * w;
      }
  }
  double cont_norm = 0.0;
  for (const auto& [key, v] : row) cont_norm += v * v;

  row_norms_.assign(rows(), 1.0);
  for (std::size_t i = 0; i < continuity_rows(); ++i) row_norms_[i] = cont_norm;
  const double marg_norm = static_cast<double>(n / static_cast<std::size_t>(grid_.n_x));
  for (std::size_t i = 0; i < marginal_rows(); ++i) row_norms_[continuity_rows() + i] = marg_norm;
}

std::size_t ConstraintSystem::max_inner_iterations() const {
  return options_.max_inner_iterations > 0 ? options_.max_inner_iterations : 10 * rows();
}

void ConstraintSystem::apply_into(const StaggeredField& u, std::span<double> out) const {
  const GridSpec& g = grid_;
  const std::size_t n = g.points();
  const double ct = g.time_coef();
  const double cx = g.space_coef();
  const double eps = options_.diffusion;
  const double lap_scale = double(g.n_x) * g.n_x;
  for (int t = 0; t < g.n_t; ++t) {
    const auto lo = u.pi_slice(t);
    const auto hi = u.pi_slice(t + 1);
    double* r = out.data() + static_cast<std::size_t>(t) * n;
    for (std::size_t x = 0; x < n; ++x) r[x] = ct * (hi[x] - lo[x]);
    for (int l = 0; l < g.k; ++l) {
      const auto m = u.momentum_slice(l, t);
      const auto& pv = prev_[l];
      for (std::size_t x = 0; x < n; ++x) r[x] += cx * (m[x] - m[pv[x]]);
    }
    if (eps > 0.0) {
      for (int l = 0; l < g.k; ++l) {
        const auto& pv = prev_[l];
        const auto& nx = next_[l];
        for (std::size_t x = 0; x < n; ++x) {
          const double second = (lo[nx[x]] + hi[nx[x]]) + (lo[pv[x]] + hi[pv[x]]) - 2.0 * (lo[x] + hi[x]);
          r[x] -= eps * lap_scale * 0.5 * second;
        }
      }
    }
  }
  std::size_t off = continuity_rows();
  const auto last = u.pi_slice(g.n_t);
  for (int l = 0; l < g.k; ++l) {
    const std::size_t stride = g.stride(l);
    double* r = out.data() + off;
    for (int j = 0; j < g.n_x; ++j) r[j] = 0.0;
    for (std::size_t x = 0; x < n; ++x) r[(x / stride) % g.n_x] += last[x];
    off += g.n_x;
  }
  if (!options_.free_initial) {
    const auto first = u.pi_slice(0);
    for (std::size_t x = 0; x < n; ++x) out[off + x] = first[x];
  }
}

void ConstraintSystem::apply_adjoint_into(std::span<const double> y, StaggeredField& out) const {
  const GridSpec& g = grid_;
  const std::size_t n = g.points();
  const double ct = g.time_coef();
  const double cx = g.space_coef();
  const double eps = options_.diffusion;
  const double lap_scale = double(g.n_x) * g.n_x;
  std::fill(out.values().begin(), out.values().end(), 0.0);
  for (int t = 0; t < g.n_t; ++t) {
    const double* r = y.data() + static_cast<std::size_t>(t) * n;
    auto lo = out.pi_slice(t);
    auto hi = out.pi_slice(t + 1);
    for (std::size_t x = 0; x < n; ++x) {
      hi[x] += ct * r[x];
      lo[x] -= ct * r[x];
    }
    for (int l = 0; l < g.k; ++l) {
      auto m = out.momentum_slice(l, t);
      const auto& pv = prev_[l];
      for (std::size_t x = 0; x < n; ++x) {
        m[x] += cx * r[x];
        m[pv[x]] -= cx * r[x];
      }
    }
    if (eps > 0.0) {
      // The periodic Laplacian is symmetric, so its transpose reuses the stencil.
      for (int l = 0; l < g.k; ++l) {
        const auto& pv = prev_[l];
        const auto& nx = next_[l];
        for (std::size_t x = 0; x < n; ++x) {
          const double second = r[nx[x]] + r[pv[x]] - 2.0 * r[x];
          const double v = -eps * lap_scale * 0.5 * second;
          lo[x] += v;
          hi[x] += v;
        }
      }
    }
  }
  std::size_t off = continuity_rows();
  auto last = out.pi_slice(g.n_t);
  for (int l = 0; l < g.k; ++l) {
    const std::size_t stride = g.stride(l);
    for (std::size_t x = 0; x < n; ++x) last[x] += y[off + (x / stride) % g.n_x];
    off += g.n_x;
  }
  if (!options_.free_initial) {
    auto first = out.pi_slice(0);
    for (std::size_t x = 0; x < n; ++x) first[x] += y[off + x];
  }
}

std::vector<double> ConstraintSystem::apply(const StaggeredField& u) const {
  check_conforms(u, grid_);
  std::vector<double> out(rows(), 0.0);
  apply_into(u, out);
  return out;
}

StaggeredField ConstraintSystem::apply_adjoint(std::span<const double> y) const {
  if (y.size() != rows()) throw DimensionError("constraint vector has wrong length");
  StaggeredField out(grid_);
  apply_adjoint_into(y, out);
  return out;
}

namespace {

struct NormalSolve {
  std::vector<double> lambda;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Jacobi-preconditioned CG on A A^T lambda = r, restarted every 200 steps
// from the recomputed true residual. Stops early once a restart no longer
// improves the true residual, which happens at the rounding floor.
NormalSolve cg_normal(const ConstraintSystem& c, std::span<const double> r, const std::vector<double>* warm,
                      double tol, std::size_t max_iter) {
  const std::size_t m = c.rows();
  const auto& diag = c.row_norms();
  NormalSolve out;
  out.lambda.assign(m, 0.0);
  if (warm != nullptr && warm->size() == m) out.lambda = *warm;
  auto& lambda = out.lambda;

  StaggeredField work(c.grid());
  std::vector<double> res(m), z(m), p(m), q(m);
  auto true_residual = [&]() {
    c.apply_adjoint_into(lambda, work);
    c.apply_into(work, res);
    for (std::size_t i = 0; i < m; ++i) res[i] = r[i] - res[i];
  };

  std::size_t iterations = 0;
  true_residual();
  double rnorm = vec::norm2(res);
  while (rnorm > tol) {
    for (std::size_t i = 0; i < m; ++i) z[i] = res[i] / diag[i];
    p = z;
    double rz = vec::dot(res, z);
    const std::size_t restart_at = iterations + 200;
    while (iterations < max_iter && iterations < restart_at) {
      c.apply_adjoint_into(p, work);
      c.apply_into(work, q);
      const double pq = vec::dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < m; ++i) {
        lambda[i] += alpha * p[i];
        res[i] -= alpha * q[i];
      }
      ++iterations;
      if (vec::norm2(res) <= tol) break;
      for (std::size_t i = 0; i < m; ++i) z[i] = res[i] / diag[i];
      const double rz_new = vec::dot(res, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
    }
    true_residual();
    const double prev = rnorm;
    rnorm = vec::norm2(res);
    if (rnorm <= tol || iterations >= max_iter || !(rnorm < 0.5 * prev)) break;
  }
  out.residual = rnorm;
  out.iterations = iterations;
  out.converged = rnorm <= tol;
  return out;
}

[[noreturn]] void fail(const char* what, std::size_t iterations, double residual, double tol) {
  std::ostringstream msg;
  msg << what << ": conjugate gradients stopped after " << iterations << " iterations with residual "
      << residual << " (tolerance " << tol << ")";
  throw ConvergenceError(msg.str(), residual);
}

}  // namespace

std::vector<double> normal_solve(const ConstraintSystem& c, std::span<const double> r,
                                 const std::vector<double>* warm) {
  if (r.size() != c.rows()) throw DimensionError("normal equations: right-hand side has wrong length");
  const double tol = c.options().projection_tol * std::max(1.0, vec::norm2(c.rhs()));
  NormalSolve s = cg_normal(c, r, warm, tol, c.max_inner_iterations());
  if (!s.converged) fail("normal equations", s.iterations, s.residual, tol);
  return std::move(s.lambda);
}

StaggeredField project(const StaggeredField& u, const ConstraintSystem& c, std::vector<double>* multiplier) {
  check_conforms(u, c.grid());
  const auto& b = c.rhs();
  const double tol = c.options().projection_tol * std::max(1.0, vec::norm2(b));
  const std::size_t m = c.rows();
  std::size_t budget = c.max_inner_iterations();

  // Large multipliers put a rounding floor under the attainable residual, so
  // the correction is refined from the projected point with a fresh
  // multiplier, which is small.
  StaggeredField out = u;
  StaggeredField corr(c.grid());
  std::vector<double> total(m, 0.0);
  std::vector<double> r(m);
  double residual = 0.0;
  std::size_t used = 0;
  for (int pass = 0; pass < 4; ++pass) {
    c.apply_into(out, r);
    for (std::size_t i = 0; i < m; ++i) r[i] -= b[i];
    residual = vec::norm2(r);
    if (residual <= tol) {
      if (multiplier != nullptr) *multiplier = std::move(total);
      return out;
    }
    const std::vector<double>* warm = (pass == 0) ? multiplier : nullptr;
    NormalSolve s = cg_normal(c, r, warm, tol, budget);
    used += s.iterations;
    budget = budget > s.iterations ? budget - s.iterations : 0;
    c.apply_adjoint_into(s.lambda, corr);
    auto ov = out.values();
    const auto cv = corr.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= cv[i];
    for (std::size_t i = 0; i < m; ++i) total[i] += s.lambda[i];
    if (budget == 0) break;
  }
  c.apply_into(out, r);
  for (std::size_t i = 0; i < m; ++i) r[i] -= b[i];
  residual = vec::norm2(r);
  if (residual > tol) fail("projection", used, residual, tol);
  if (multiplier != nullptr) *multiplier = std::move(total);
  return out;
}

ResidualReport residual_report(const StaggeredField& u, const ConstraintSystem& c) {
  const auto au = c.apply(u);
  const auto& b = c.rhs();
  ResidualReport r;
  std::size_t i = 0;
  for (; i < c.continuity_rows(); ++i) r.continuity_inf = std::max(r.continuity_inf, std::abs(au[i] - b[i]));
  for (; i < c.continuity_rows() + c.marginal_rows(); ++i)
    r.marginal_inf = std::max(r.marginal_inf, std::abs(au[i] - b[i]));
  for (; i < c.rows(); ++i) r.source_inf = std::max(r.source_inf, std::abs(au[i] - b[i]));
  r.min_mass = vec::min(u.pi());
  return r;
}

}  // namespace mmot
