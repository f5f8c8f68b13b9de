#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmot/grid.hpp"
#include "mmot/measure.hpp"

namespace mmot {

enum class CostType {
  quadratic_pairwise,  ///< L(v) = sum_{i<j} |v_i - v_j|^2
  quadratic_full,      ///< L(v) = |v|^2 / 2
};

std::string to_string(CostType type);
CostType cost_type_from_string(const std::string& name);

/// Evaluation-only cost L : R^k -> R.
using CostFunction = std::function<double(std::span<const double>)>;

/// A shipped quadratic cost, optionally multiplied by a positive scale.
///
/// Both kinds factor as L(v) = |C v|^2 for a linear channel map C, so the
/// dynamic integrand is the perspective J(pi, C m) = |C m|^2 / pi.
struct CostKind {
  CostType type = CostType::quadratic_pairwise;
  double scale = 1.0;

  /// Number of channels of C: k(k-1)/2 pairs, or k for the full cost.
  int channels(int k) const;
  double evaluate(std::span<const double> v) const;
  CostFunction function() const;

  /// out = C m for one point; m has k entries, out has channels(k).
  void apply_channels(std::span<const double> m, std::span<double> out) const;
  /// out += C^T c for one point.
  void apply_channels_adjoint(std::span<const double> c, std::span<double> out) const;
};

/// Perspective argument: mass plus one momentum block.
struct PerspectivePoint {
  double pi = 0.0;
  std::vector<double> m;
};

/// |m|^2/pi for pi > 0, 0 at (0, 0), +inf otherwise.
double perspective(double pi, std::span<const double> m);

/// Sum over atoms of mass * L(x / n_x). Atom masses must be nonnegative.
double static_cost(const CouplingTable& gamma, const CostFunction& cost);
double static_cost(const CouplingTable& gamma, const CostKind& cost);

/// What to do with centered cells outside the perspective domain.
enum class DomainPolicy {
  strict,         ///< +inf as soon as one cell has pi < 0, or pi = 0 with C m != 0
  positive_part,  ///< cells with pi <= 0 contribute nothing
};

/// Time-weighted sum of L(m/pi) pi over the centered grid.
double dynamic_cost(const CenteredField& u, const CostKind& cost, const GridSpec& grid,
                    DomainPolicy policy = DomainPolicy::strict);

/// Pair channels (m_i - m_j)_{i<j} of a centered momentum field, channel-major.
std::vector<double> pairwise_diff(const CenteredField& u);
/// Adjoint of pairwise_diff; the result carries zero mass.
CenteredField pairwise_diff_adjoint(std::span<const double> channels, const GridSpec& grid);

/// Minimiser of 1/2 (pi - p.pi)^2 + 1/2 |m - p.m|^2 + gamma J(pi, m).
///
/// The mass is the largest root of (pi - p.pi)(pi + 2 gamma)^2 = gamma |p.m|^2,
/// found by bracketed Newton; a non-positive root maps to (0, 0).
PerspectivePoint prox_perspective(double gamma, const PerspectivePoint& p);
/// In-place variant used by the solver's per-cell loops.
void prox_perspective_inplace(double gamma, double& pi, std::span<double> m);

/// Proximal map of sigma J^* via Moreau's identity.
PerspectivePoint prox_conjugate(double sigma, const PerspectivePoint& p);
void prox_conjugate_inplace(double sigma, double& pi, std::span<double> m);

/// L(x) + alpha |x|^2 / 2 together with the constant that converts optimal
/// values of the shifted problem back to the original one.
struct ShiftedCost {
  CostFunction cost;
  double correction = 0.0;  ///< alpha/2 * sum_l sum_x |x|^2 mu_l(x)
};

ShiftedCost semiconvex_shift(const CostFunction& cost, double alpha,
                             std::span<const DiscreteMeasure> marginals);

}  // namespace mmot
