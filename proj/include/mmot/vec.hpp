#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "mmot/errors.hpp"

// Small dense helpers over contiguous double ranges. Reductions run in index
// order so results are reproducible bit for bit.
namespace mmot::vec {

inline void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("vector length mismatch");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

inline double min(std::span<const double> a) {
  double m = a.empty() ? 0.0 : a[0];
  for (double v : a) m = std::min(m, v);
  return m;
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace mmot::vec
