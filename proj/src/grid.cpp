#include "mmot/grid.hpp"

#include "mmot/errors.hpp"

namespace mmot {

std::string to_string(ScalingMode mode) {
  return mode == ScalingMode::divided_differences ? "divided_differences" : "reciprocal_coefficients";
}

ScalingMode scaling_mode_from_string(const std::string& name) {
  if (name == "divided_differences") return ScalingMode::divided_differences;
  if (name == "reciprocal_coefficients") return ScalingMode::reciprocal_coefficients;
  throw ValidationError("unknown scaling mode '" + name + "'");
}

void GridSpec::validate() const {
  if (k < 2) throw ValidationError("grid: k must be >= 2");
  if (n_t < 1) throw ValidationError("grid: n_t must be >= 1");
  if (n_x < 2) throw ValidationError("grid: n_x must be >= 2");
}

std::size_t GridSpec::points() const {
  std::size_t r = 1;
  for (int l = 0; l < k; ++l) r *= static_cast<std::size_t>(n_x);
  return r;
}

double GridSpec::time_coef() const {
  return scaling == ScalingMode::divided_differences ? double(n_t) : 1.0 / n_t;
}

double GridSpec::space_coef() const {
  return scaling == ScalingMode::divided_differences ? double(n_x) : 1.0 / n_x;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int l = axis + 1; l < k; ++l) s *= static_cast<std::size_t>(n_x);
  return s;
}

std::size_t GridSpec::flat(std::span<const int> c) const {
  if (static_cast<int>(c.size()) != k) throw DimensionError("multi-index has wrong arity");
  std::size_t f = 0;
  for (int l = 0; l < k; ++l) {
    if (c[l] < 0 || c[l] >= n_x) throw ValidationError("multi-index coordinate out of range");
    f = f * static_cast<std::size_t>(n_x) + static_cast<std::size_t>(c[l]);
  }
  return f;
}

std::vector<int> GridSpec::coords(std::size_t f) const {
  std::vector<int> c(k);
  for (int l = k - 1; l >= 0; --l) {
    c[l] = static_cast<int>(f % static_cast<std::size_t>(n_x));
    f /= static_cast<std::size_t>(n_x);
  }
  return c;
}

std::size_t GridSpec::shift(std::size_t f, int axis, int offset) const {
  const std::size_t s = stride(axis);
  const long c = static_cast<long>((f / s) % static_cast<std::size_t>(n_x));
  long nc = (c + offset) % n_x;
  if (nc < 0) nc += n_x;
  return static_cast<std::size_t>(static_cast<long>(f) + (nc - c) * static_cast<long>(s));
}

// ---------------------------------------------------------------------------

StaggeredField::StaggeredField(const GridSpec& grid)
    : grid_(grid),
      values_((static_cast<std::size_t>(grid.n_t + 1) + static_cast<std::size_t>(grid.k) * grid.n_t) *
                  grid.points(),
              0.0) {}

std::span<double> StaggeredField::pi() {
  return {values_.data(), static_cast<std::size_t>(grid_.n_t + 1) * grid_.points()};
}
std::span<const double> StaggeredField::pi() const {
  return {values_.data(), static_cast<std::size_t>(grid_.n_t + 1) * grid_.points()};
}
std::span<double> StaggeredField::pi_slice(int t) {
  return pi().subspan(static_cast<std::size_t>(t) * grid_.points(), grid_.points());
}
std::span<const double> StaggeredField::pi_slice(int t) const {
  return pi().subspan(static_cast<std::size_t>(t) * grid_.points(), grid_.points());
}
std::span<double> StaggeredField::momentum(int l) {
  const std::size_t off = static_cast<std::size_t>(grid_.n_t + 1) * grid_.points();
  return std::span<double>(values_).subspan(off + l * grid_.centered_slots(), grid_.centered_slots());
}
std::span<const double> StaggeredField::momentum(int l) const {
  const std::size_t off = static_cast<std::size_t>(grid_.n_t + 1) * grid_.points();
  return std::span<const double>(values_).subspan(off + l * grid_.centered_slots(), grid_.centered_slots());
}
std::span<double> StaggeredField::momentum_slice(int l, int t) {
  return momentum(l).subspan(static_cast<std::size_t>(t) * grid_.points(), grid_.points());
}
std::span<const double> StaggeredField::momentum_slice(int l, int t) const {
  return momentum(l).subspan(static_cast<std::size_t>(t) * grid_.points(), grid_.points());
}

CenteredField::CenteredField(const GridSpec& grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.k + 1) * grid.centered_slots(), 0.0) {}

std::span<double> CenteredField::pi() { return std::span<double>(values_).first(grid_.centered_slots()); }
std::span<const double> CenteredField::pi() const {
  return std::span<const double>(values_).first(grid_.centered_slots());
}
std::span<double> CenteredField::momentum(int l) {
  return std::span<double>(values_).subspan((l + 1) * grid_.centered_slots(), grid_.centered_slots());
}
std::span<const double> CenteredField::momentum(int l) const {
  return std::span<const double>(values_).subspan((l + 1) * grid_.centered_slots(), grid_.centered_slots());
}

void check_conforms(const StaggeredField& u, const GridSpec& grid) {
  if (!(u.grid() == grid)) throw DimensionError("staggered field does not conform to the grid");
}

void check_conforms(const CenteredField& u, const GridSpec& grid) {
  if (!(u.grid() == grid)) throw DimensionError("centered field does not conform to the grid");
}

// ---------------------------------------------------------------------------

CenteredField interp(const StaggeredField& u, const GridSpec& g) {
  check_conforms(u, g);
  CenteredField out(g);
  const std::size_t n = g.points();
  auto pc = out.pi();
  const auto ps = u.pi();
  for (std::size_t i = 0; i < g.centered_slots(); ++i) pc[i] = 0.5 * (ps[i] + ps[i + n]);
  for (int l = 0; l < g.k; ++l) {
    auto mc = out.momentum(l);
    for (int t = 0; t < g.n_t; ++t) {
      const auto ms = u.momentum_slice(l, t);
      for (std::size_t x = 0; x < n; ++x) {
        mc[t * n + x] = 0.5 * (ms[x] + ms[g.shift(x, l, -1)]);
      }
    }
  }
  return out;
}

StaggeredField interp_adjoint(const CenteredField& u, const GridSpec& g) {
  check_conforms(u, g);
  StaggeredField out(g);
  const std::size_t n = g.points();
  auto ps = out.pi();
  const auto pc = u.pi();
  for (std::size_t i = 0; i < g.centered_slots(); ++i) {
    ps[i] += 0.5 * pc[i];
    ps[i + n] += 0.5 * pc[i];
  }
  for (int l = 0; l < g.k; ++l) {
    const auto mc = u.momentum(l);
    for (int t = 0; t < g.n_t; ++t) {
      auto ms = out.momentum_slice(l, t);
      for (std::size_t x = 0; x < n; ++x) {
        const double v = 0.5 * mc[t * n + x];
        ms[x] += v;
        ms[g.shift(x, l, -1)] += v;
      }
    }
  }
  return out;
}

void laplacian(std::span<const double> in, std::span<double> out, const GridSpec& g) {
  const std::size_t n = g.points();
  if (in.size() != n || out.size() != n) throw DimensionError("laplacian expects one spatial slice");
  const double scale = double(g.n_x) * g.n_x;
  for (std::size_t x = 0; x < n; ++x) {
    double acc = 0.0;
    for (int l = 0; l < g.k; ++l) acc += in[g.shift(x, l, 1)] + in[g.shift(x, l, -1)] - 2.0 * in[x];
    out[x] = scale * acc;
  }
}

std::vector<double> divergence_residual(const StaggeredField& u, const GridSpec& g, double diffusion) {
  check_conforms(u, g);
  if (diffusion < 0.0) throw ParameterError("diffusion must be nonnegative");
  const std::size_t n = g.points();
  const double ct = g.time_coef();
  const double cx = g.space_coef();
  std::vector<double> r(g.centered_slots(), 0.0);
  std::vector<double> avg(n), lap(n);
  for (int t = 0; t < g.n_t; ++t) {
    const auto lo = u.pi_slice(t);
    const auto hi = u.pi_slice(t + 1);
    double* row = r.data() + static_cast<std::size_t>(t) * n;
    for (std::size_t x = 0; x < n; ++x) row[x] = ct * (hi[x] - lo[x]);
    for (int l = 0; l < g.k; ++l) {
      const auto m = u.momentum_slice(l, t);
      for (std::size_t x = 0; x < n; ++x) row[x] += cx * (m[x] - m[g.shift(x, l, -1)]);
    }
    if (diffusion > 0.0) {
      for (std::size_t x = 0; x < n; ++x) avg[x] = 0.5 * (lo[x] + hi[x]);
      laplacian(avg, lap, g);
      for (std::size_t x = 0; x < n; ++x) row[x] -= diffusion * lap[x];
    }
  }
  return r;
}

}  // namespace mmot
