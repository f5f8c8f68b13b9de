#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmot/cost.hpp"
#include "mmot/measure.hpp"

namespace mmot {

/// Built-in 1D marginals on [0, 1].
///  - sine_bump:   ((pi/2) sin(pi x) + delta) / (1 + delta)
///  - tent:        4x on [0, 1/2), 4(1 - x) on [1/2, 1]
///  - double_tent: 8x, 4 - 8x, 8x - 4, 8 - 8x on the quarters (left-closed)
///  - uniform:     1
enum class Preset { sine_bump, tent, double_tent, uniform };

std::string to_string(Preset p);
Preset preset_from_string(const std::string& name);

double preset_density(Preset p, double x, double delta = 0.2);

/// Density sampled at j/n_x, times the cell width, renormalized to total 1.
DiscreteMeasure preset_marginal(Preset p, int n_x, double delta = 0.2);

/// Piecewise-linear distribution function. Cell j covers [j/n, (j+1)/n) and
/// its mass ramps in linearly, so breakpoints are j/n with values
/// sum_{i<j} mass_i.
struct Cdf1D {
  std::vector<double> breakpoints;
  std::vector<double> values;

  double operator()(double x) const;
};

Cdf1D cdf(const DiscreteMeasure& mu);

/// Left-continuous generalized inverse: the smallest x with F(x) >= q.
double quantile(const Cdf1D& c, double q);

/// Values of a map sampled at the grid points j/n.
struct MapTable {
  std::vector<double> x;
  std::vector<double> value;
};

/// Monotone rearrangement T = F_l^{-1} o F_1 at the grid points.
MapTable analytic_map(const DiscreteMeasure& mu1, const DiscreteMeasure& mul);

/// Quantile coupling: all marginals evaluated at a common uniform level.
CouplingTable comonotone_coupling(std::span<const DiscreteMeasure> marginals);

/// Static cost of the comonotone coupling, optimal for the convex costs.
double static_optimum(std::span<const DiscreteMeasure> marginals, const CostKind& cost);

/// Optimal potentials (lambda_1, lambda_2) of the two-marginal static dual:
/// lambda_1(x) + lambda_2(y) <= c(x, y) with equality on the support of the
/// comonotone coupling. Only k = 2 is supported.
std::vector<std::vector<double>> static_dual_potentials(std::span<const DiscreteMeasure> marginals,
                                                        const CostKind& cost);

}  // namespace mmot
