#include "mmot/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmot/errors.hpp"

namespace mmot {

SourceSpec SourceSpec::diagonal(DiscreteMeasure nu) {
  SourceSpec s;
  s.kind = Kind::diagonal;
  s.nu = std::move(nu);
  return s;
}

SourceSpec SourceSpec::delta(std::vector<int> point) {
  SourceSpec s;
  s.kind = Kind::delta;
  s.point = std::move(point);
  return s;
}

SourceSpec SourceSpec::explicit_measure(DiscreteMeasure mass) {
  SourceSpec s;
  s.kind = Kind::explicit_mass;
  s.mass = std::move(mass);
  return s;
}

DiscreteMeasure realize_source(const SourceSpec& s, const GridSpec& g) {
  g.validate();
  DiscreteMeasure out(g.n_x, g.k);
  switch (s.kind) {
    case SourceSpec::Kind::diagonal: {
      if (s.nu.dims != 1 || s.nu.n_x != g.n_x) throw DimensionError("diagonal source needs a 1D measure on the grid");
      s.nu.validate(1e-12);
      std::vector<int> c(g.k);
      for (int j = 0; j < g.n_x; ++j) {
        std::fill(c.begin(), c.end(), j);
        out.mass[g.flat(c)] = s.nu.mass[j];
      }
      break;
    }
    case SourceSpec::Kind::delta: {
      if (static_cast<int>(s.point.size()) != g.k) throw ValidationError("delta source point has wrong arity");
      for (int c : s.point)
        if (c < 0 || c >= g.n_x) throw ValidationError("delta source point is off the grid");
      out.mass[g.flat(s.point)] = 1.0;
      break;
    }
    case SourceSpec::Kind::explicit_mass: {
      if (s.mass.dims != g.k || s.mass.n_x != g.n_x) throw DimensionError("explicit source does not match the grid");
      s.mass.validate(1e-12);
      out = s.mass;
      break;
    }
  }
  return out;
}

Pairing independent_pairing(const DiscreteMeasure& source, const CouplingTable& gamma) {
  Pairing p;
  for (std::size_t a = 0; a < source.mass.size(); ++a) {
    if (source.mass[a] <= 0.0) continue;
    for (std::size_t b = 0; b < gamma.atoms.size(); ++b) {
      if (gamma.atoms[b].mass <= 0.0) continue;
      p.entries.push_back({a, b, source.mass[a] * gamma.atoms[b].mass});
    }
  }
  return p;
}

Pairing sorted_pairing(const DiscreteMeasure& source, const CouplingTable& gamma) {
  const int n = source.n_x;
  const int k = source.dims;
  std::vector<std::size_t> sa, sb;
  std::vector<double> ka(source.mass.size()), kb(gamma.atoms.size());
  for (std::size_t a = 0; a < source.mass.size(); ++a) {
    if (source.mass[a] <= 0.0) continue;
    std::size_t f = a;
    double s = 0.0;
    for (int l = 0; l < k; ++l) {
      s += static_cast<double>(f % n);
      f /= n;
    }
    ka[a] = s;
    sa.push_back(a);
  }
  for (std::size_t b = 0; b < gamma.atoms.size(); ++b) {
    if (gamma.atoms[b].mass <= 0.0) continue;
    kb[b] = std::accumulate(gamma.atoms[b].coords.begin(), gamma.atoms[b].coords.end(), 0.0);
    sb.push_back(b);
  }
  std::stable_sort(sa.begin(), sa.end(), [&](auto x, auto y) { return ka[x] < ka[y]; });
  std::stable_sort(sb.begin(), sb.end(), [&](auto x, auto y) { return kb[x] < kb[y]; });

  Pairing p;
  std::size_t i = 0, j = 0;
  double ra = sa.empty() ? 0.0 : source.mass[sa[0]];
  double rb = sb.empty() ? 0.0 : gamma.atoms[sb[0]].mass;
  while (i < sa.size() && j < sb.size()) {
    const double w = std::min(ra, rb);
    if (w > 0.0) p.entries.push_back({sa[i], sb[j], w});
    ra -= w;
    rb -= w;
    if (ra <= 1e-15 && i < sa.size()) {
      if (++i < sa.size()) ra = source.mass[sa[i]];
    }
    if (rb <= 1e-15 && j < sb.size()) {
      if (++j < sb.size()) rb = gamma.atoms[sb[j]].mass;
    }
  }
  return p;
}

namespace {

// Adds w to the 2^k cells around the real position pos (cell units), wrapping
// periodically.
void splat(std::span<double> slice, const GridSpec& g, std::span<const double> pos, double w) {
  const int k = g.k;
  std::vector<int> base(k), c(k);
  std::vector<double> frac(k);
  for (int l = 0; l < k; ++l) {
    const double fl = std::floor(pos[l]);
    base[l] = static_cast<int>(fl);
    frac[l] = pos[l] - fl;
  }
  for (int corner = 0; corner < (1 << k); ++corner) {
    double weight = w;
    for (int l = 0; l < k; ++l) {
      const int bit = (corner >> l) & 1;
      weight *= bit ? frac[l] : 1.0 - frac[l];
      int v = (base[l] + bit) % g.n_x;
      if (v < 0) v += g.n_x;
      c[l] = v;
    }
    if (weight != 0.0) slice[g.flat(c)] += weight;
  }
}

}  // namespace

StaggeredField flow_from_coupling(const DiscreteMeasure& source, const CouplingTable& gamma,
                                  const Pairing& pairing, const GridSpec& g) {
  g.validate();
  if (source.dims != g.k || source.n_x != g.n_x) throw DimensionError("source does not match the grid");
  if (gamma.k != g.k || gamma.n_x != g.n_x) throw DimensionError("coupling does not match the grid");

  std::vector<double> ma(source.mass.size(), 0.0), mb(gamma.atoms.size(), 0.0);
  for (const auto& e : pairing.entries) {
    if (e.source >= ma.size() || e.target >= mb.size()) throw ValidationError("pairing refers to a missing atom");
    if (e.mass < 0.0) throw ValidationError("pairing has negative mass");
    ma[e.source] += e.mass;
    mb[e.target] += e.mass;
  }
  for (std::size_t a = 0; a < ma.size(); ++a)
    if (std::abs(ma[a] - source.mass[a]) > 1e-10) throw ValidationError("pairing does not reproduce the source");
  for (std::size_t b = 0; b < mb.size(); ++b)
    if (std::abs(mb[b] - gamma.atoms[b].mass) > 1e-10) throw ValidationError("pairing does not reproduce the coupling");

  StaggeredField u(g);
  const int k = g.k;
  std::vector<double> ya(k), yb(k), p0(k), p1(k);
  std::vector<int> base(k), c(k);
  std::vector<double> frac(k);
  for (const auto& e : pairing.entries) {
    const auto ca = g.coords(e.source);
    for (int l = 0; l < k; ++l) {
      ya[l] = ca[l];
      yb[l] = gamma.atoms[e.target].coords[l];
    }
    for (int i = 0; i <= g.n_t; ++i) {
      const double t = static_cast<double>(i) / g.n_t;
      for (int l = 0; l < k; ++l) p0[l] = (1.0 - t) * ya[l] + t * yb[l];
      splat(u.pi_slice(i), g, p0, e.mass);
    }
    for (int i = 0; i < g.n_t; ++i) {
      const double t0 = static_cast<double>(i) / g.n_t;
      const double t1 = static_cast<double>(i + 1) / g.n_t;
      for (int l = 0; l < k; ++l) {
        p0[l] = (1.0 - t0) * ya[l] + t0 * yb[l];
        p1[l] = (1.0 - t1) * ya[l] + t1 * yb[l];
      }
      // Telescoping T1 - T0 = sum_l T1_{<l} (T1_l - T0_l) T0_{>l}: axis l moves
      // its 1D tent while the earlier axes sit at the end point and the later
      // ones at the start point. Each 1D move is realized by face fluxes.
      for (int l = 0; l < k; ++l) {
        if (p0[l] == p1[l]) continue;
        const int lo = static_cast<int>(std::floor(std::min(p0[l], p1[l])));
        const int hi = static_cast<int>(std::floor(std::max(p0[l], p1[l]))) + 1;
        std::vector<double> diff(hi - lo + 1, 0.0);
        auto add_tent = [&](double pos, double sign) {
          const double fl = std::floor(pos);
          const int j = static_cast<int>(fl) - lo;
          diff[j] += sign * (1.0 - (pos - fl));
          if (j + 1 < static_cast<int>(diff.size())) diff[j + 1] += sign * (pos - fl);
        };
        add_tent(p0[l], 1.0);
        add_tent(p1[l], -1.0);
        // F_j: mass crossing the face between cells j and j+1 rightwards.
        std::vector<double> flux(diff.size(), 0.0);
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < diff.size(); ++j) {
          acc += diff[j];
          flux[j] = acc;
        }
        const double scale = e.mass * static_cast<double>(g.n_t) / g.n_x;
        auto mom = u.momentum_slice(l, i);
        // Multilinear weights over the remaining axes.
        const int others = k - 1;
        for (int a = 0; a < k; ++a) {
          const double pos = a < l ? p1[a] : p0[a];
          const double fl = std::floor(pos);
          base[a] = static_cast<int>(fl);
          frac[a] = pos - fl;
        }
        for (int corner = 0; corner < (1 << others); ++corner) {
          double w = scale;
          int bit_index = 0;
          for (int a = 0; a < k; ++a) {
            if (a == l) continue;
            const int bit = (corner >> bit_index++) & 1;
            w *= bit ? frac[a] : 1.0 - frac[a];
            c[a] = ((base[a] + bit) % g.n_x + g.n_x) % g.n_x;
          }
          if (w == 0.0) continue;
          for (std::size_t j = 0; j + 1 < flux.size(); ++j) {
            if (flux[j] == 0.0) continue;
            c[l] = ((lo + static_cast<int>(j)) % g.n_x + g.n_x) % g.n_x;
            mom[g.flat(c)] += w * flux[j];
          }
        }
      }
    }
  }
  return u;
}

StaggeredField flow_from_coupling(const DiscreteMeasure& source, const CouplingTable& gamma, const GridSpec& g) {
  return flow_from_coupling(source, gamma, independent_pairing(source, gamma), g);
}

void ProbabilityKernel::validate() const {
  if (k < 1 || radius < 0) throw ValidationError("kernel needs k >= 1 and radius >= 0");
  const int width = 2 * radius + 1;
  std::size_t size = 1;
  for (int l = 0; l < k; ++l) size *= static_cast<std::size_t>(width);
  if (weights.size() != size) throw DimensionError("kernel weights do not match the stencil");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("kernel weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("kernel weights must sum to 1");
  for (std::size_t i = 0; i < size; ++i) {
    // Negating every offset reverses the row-major index.
    if (std::abs(weights[i] - weights[size - 1 - i]) > 1e-15) throw ValidationError("kernel must be symmetric");
  }
}

ProbabilityKernel ProbabilityKernel::identity(int k) {
  ProbabilityKernel z;
  z.k = k;
  z.radius = 0;
  z.weights = {1.0};
  return z;
}

ProbabilityKernel ProbabilityKernel::separable(int k, const std::vector<double>& half_profile) {
  if (half_profile.empty()) throw ValidationError("kernel profile is empty");
  ProbabilityKernel z;
  z.k = k;
  z.radius = static_cast<int>(half_profile.size()) - 1;
  const int width = 2 * z.radius + 1;
  std::size_t size = 1;
  for (int l = 0; l < k; ++l) size *= static_cast<std::size_t>(width);
  z.weights.assign(size, 1.0);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t f = i;
    double w = 1.0;
    for (int l = 0; l < k; ++l) {
      const int off = static_cast<int>(f % width) - z.radius;
      f /= width;
      w *= half_profile.at(std::abs(off));
    }
    z.weights[i] = w;
  }
  const double total = std::accumulate(z.weights.begin(), z.weights.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("kernel profile has no mass");
  for (double& w : z.weights) w /= total;
  return z;
}

StaggeredField smooth_flow(const StaggeredField& u, const ProbabilityKernel& kernel) {
  kernel.validate();
  const GridSpec& g = u.grid();
  if (kernel.k != g.k) throw DimensionError("kernel dimension differs from the grid");
  const int width = 2 * kernel.radius + 1;
  const std::size_t n = g.points();

  // Offsets of every stencil entry as flat-index maps.
  std::vector<std::vector<std::size_t>> target(kernel.weights.size(), std::vector<std::size_t>(n));
  for (std::size_t s = 0; s < kernel.weights.size(); ++s) {
    std::vector<int> off(g.k);
    std::size_t f = s;
    for (int l = g.k - 1; l >= 0; --l) {
      off[l] = static_cast<int>(f % width) - kernel.radius;
      f /= width;
    }
    for (std::size_t x = 0; x < n; ++x) {
      std::size_t y = x;
      for (int l = 0; l < g.k; ++l) y = g.shift(y, l, off[l]);
      target[s][x] = y;
    }
  }

  StaggeredField out(g);
  const auto in = u.values();
  auto res = out.values();
  const std::size_t slices = in.size() / n;
  for (std::size_t sl = 0; sl < slices; ++sl) {
    const double* src = in.data() + sl * n;
    double* dst = res.data() + sl * n;
    for (std::size_t s = 0; s < kernel.weights.size(); ++s) {
      const double w = kernel.weights[s];
      if (w == 0.0) continue;
      const auto& tg = target[s];
      for (std::size_t x = 0; x < n; ++x) dst[tg[x]] += w * src[x];
    }
  }
  return out;
}

}  // namespace mmot
