#include "mmot/measure.hpp"

#include <cmath>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(int n, int d) : n_x(n), dims(d), mass(ipow(n, d), 0.0) {}

DiscreteMeasure::DiscreteMeasure(int n, int d, std::vector<double> m)
    : n_x(n), dims(d), mass(std::move(m)) {
  if (mass.size() != ipow(n, d)) throw DimensionError("measure size does not match n_x^dims");
}

double DiscreteMeasure::total() const {
  double s = 0.0;
  for (double v : mass) s += v;
  return s;
}

double DiscreteMeasure::min() const {
  double m = mass.empty() ? 0.0 : mass[0];
  for (double v : mass) m = std::min(m, v);
  return m;
}

void DiscreteMeasure::normalize() {
  const double s = total();
  if (!(s > 0.0)) throw ValidationError("cannot normalize a measure with non-positive total mass");
  for (double& v : mass) v /= s;
}

void DiscreteMeasure::validate(double tol) const {
  if (mass.size() != ipow(n_x, dims)) throw DimensionError("measure size does not match n_x^dims");
  for (double v : mass) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("measure has a negative or non-finite entry");
  }
  if (std::abs(total() - 1.0) > tol) throw ValidationError("measure does not sum to 1");
}

DiscreteMeasure DiscreteMeasure::uniform(int n, int d) {
  DiscreteMeasure m(n, d);
  const double w = 1.0 / static_cast<double>(m.mass.size());
  for (double& v : m.mass) v = w;
  return m;
}

double CouplingTable::total() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}

DiscreteMeasure CouplingTable::to_dense() const {
  DiscreteMeasure out(n_x, k);
  for (const auto& a : atoms) {
    if (static_cast<int>(a.coords.size()) != k) throw DimensionError("atom has wrong arity");
    std::size_t flat = 0;
    for (int l = 0; l < k; ++l) {
      if (a.coords[l] < 0 || a.coords[l] >= n_x) throw ValidationError("atom lies off the grid");
      flat = flat * static_cast<std::size_t>(n_x) + static_cast<std::size_t>(a.coords[l]);
    }
    out.mass[flat] += a.mass;
  }
  return out;
}

CouplingTable CouplingTable::from_dense(const DiscreteMeasure& m, double threshold) {
  CouplingTable t{m.dims, m.n_x, {}};
  std::vector<int> c(m.dims, 0);
  for (std::size_t flat = 0; flat < m.mass.size(); ++flat) {
    if (m.mass[flat] > threshold) t.atoms.push_back({c, m.mass[flat]});
    for (int l = m.dims - 1; l >= 0; --l) {
      if (++c[l] < m.n_x) break;
      c[l] = 0;
    }
  }
  return t;
}

DiscreteMeasure marginalize(const DiscreteMeasure& mass, int axis) {
  if (axis < 0 || axis >= mass.dims) throw ValidationError("marginal axis out of range");
  if (mass.mass.size() != ipow(mass.n_x, mass.dims)) throw DimensionError("measure size does not match n_x^dims");
  DiscreteMeasure out(mass.n_x, 1);
  const std::size_t stride = ipow(mass.n_x, mass.dims - 1 - axis);
  for (std::size_t flat = 0; flat < mass.mass.size(); ++flat) {
    out.mass[(flat / stride) % static_cast<std::size_t>(mass.n_x)] += mass.mass[flat];
  }
  return out;
}

DiscreteMeasure marginalize(const CouplingTable& gamma, int axis) {
  if (axis < 0 || axis >= gamma.k) throw ValidationError("marginal axis out of range");
  DiscreteMeasure out(gamma.n_x, 1);
  for (const auto& a : gamma.atoms) out.mass.at(a.coords.at(axis)) += a.mass;
  return out;
}

DiscreteMeasure product(std::span<const DiscreteMeasure> factors) {
  if (factors.empty()) throw ValidationError("product of zero measures");
  const int n = factors[0].n_x;
  for (const auto& f : factors) {
    if (f.dims != 1 || f.n_x != n) throw DimensionError("product factors must be 1D on a common grid");
  }
  const int k = static_cast<int>(factors.size());
  DiscreteMeasure out(n, k);
  std::vector<int> c(k, 0);
  for (std::size_t flat = 0; flat < out.mass.size(); ++flat) {
    double w = 1.0;
    for (int l = 0; l < k; ++l) w *= factors[l].mass[c[l]];
    out.mass[flat] = w;
    for (int l = k - 1; l >= 0; --l) {
      if (++c[l] < n) break;
      c[l] = 0;
    }
  }
  return out;
}

}  // namespace mmot
