#pragma once

#include <span>
#include <vector>

#include "mmot/cost.hpp"
#include "mmot/grid.hpp"
#include "mmot/measure.hpp"

namespace mmot {

/// Dual variables: lambda(t, x) on the staggered times times the product
/// grid, plus one potential per marginal on the 1D grid. Potentials live on
/// the box [0, 1)^k with real coordinates x = index / n_x.
struct DualPotentials {
  GridSpec grid;
  std::vector<double> lambda_t;               ///< (n_t + 1) * n_x^k, time slowest
  std::vector<std::vector<double>> lambda_l;  ///< k vectors of n_x entries

  explicit DualPotentials(const GridSpec& g);
  std::span<double> slice(int t);
  std::span<const double> slice(int t) const;
};

/// Convex conjugate L*(y) of the cost. For the pairwise cost it is finite
/// only on the orthogonal complement of the diagonal (relative tolerance
/// 1e-10), and +inf elsewhere.
double legendre(const CostKind& cost, std::span<const double> y);

/// max over centered cells of n_t [lambda(t+1) - lambda(t)] + L*(grad lbar),
/// lbar the two-slice average. The gradient is assembled from difference
/// quotients along the diagonal and along e_j - e_{j+1}, centered when both
/// neighbours lie in the box and one-sided otherwise, so potentials that are
/// constant along the diagonal have an exactly orthogonal gradient.
double hj_residual(const DualPotentials& p, const CostKind& cost);

/// max over points with positive product mass of sum_l lambda_l(x_l) - lambda(1, x).
double domination_check(const DualPotentials& p, std::span<const DiscreteMeasure> marginals);

/// sum_l <lambda_l, mu_l> - <lambda(0, .), source>.
double dual_objective(const DualPotentials& p, std::span<const DiscreteMeasure> marginals,
                      const DiscreteMeasure& source);

/// Hopf-Lax inf-convolution min_x lambda0(x) + t L((y - x) / t) over the box
/// grid of `grid`. t must be positive.
std::vector<double> hopf_lax_lift(std::span<const double> lambda0, const CostKind& cost, double t,
                                  const GridSpec& grid);

/// Subtracts r t from lambda(t, .) and r from the first marginal potential,
/// where r is the positive part of hj_residual. The result satisfies the
/// discrete HJ inequality, domination is unchanged and the dual objective
/// drops by r. Returns r.
double restore_hj_feasibility(DualPotentials& p, const CostKind& cost);

/// Builds full dual potentials from static ones: lambda(0, x) =
/// max_z sum_l lambda_l(z_l) - L(z - x), then lambda(t, .) is its Hopf-Lax
/// lift at every staggered time.
DualPotentials lift_static_duals(const std::vector<std::vector<double>>& lambda_l, const CostKind& cost,
                                 const GridSpec& grid);

}  // namespace mmot
