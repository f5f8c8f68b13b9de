#pragma once

#include <random>
#include <vector>

#include "mmot/grid.hpp"
#include "mmot/measure.hpp"

namespace testing {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline mmot::StaggeredField random_staggered(std::mt19937_64& rng, const mmot::GridSpec& g) {
  mmot::StaggeredField u(g);
  auto v = random_vector(rng, u.values().size());
  std::copy(v.begin(), v.end(), u.values().begin());
  return u;
}

inline mmot::CenteredField random_centered(std::mt19937_64& rng, const mmot::GridSpec& g) {
  mmot::CenteredField u(g);
  auto v = random_vector(rng, u.values().size());
  std::copy(v.begin(), v.end(), u.values().begin());
  return u;
}

inline mmot::DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int dims = 1) {
  std::size_t size = 1;
  for (int l = 0; l < dims; ++l) size *= static_cast<std::size_t>(n);
  auto v = random_vector(rng, size, 0.1, 1.0);
  mmot::DiscreteMeasure m(n, dims, v);
  m.normalize();
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace testing
