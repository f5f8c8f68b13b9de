#pragma once

#include <vector>

#include "mmot/grid.hpp"
#include "mmot/measure.hpp"
#include "mmot/oracle.hpp"

namespace mmot {

struct TerminalCoupling {
  DiscreteMeasure coupling;
  double clipped_mass = 0.0;  ///< total negative mass removed before renormalizing
};

/// The t = 1 mass slice, negative entries clipped to 0 and renormalized.
/// Throws DegenerateOutputError when nothing positive remains.
TerminalCoupling terminal_coupling(const StaggeredField& u);

/// Joint law of axes i and j (axis i slowest).
DiscreteMeasure pair_marginal(const DiscreteMeasure& coupling, int i, int j);

enum class Conditioning { row_marginal, target_mu1 };

struct MapEstimate {
  std::vector<double> x;
  std::vector<double> value;  ///< in [0, 1)
  std::vector<bool> valid;
};

/// Circular conditional mean of the second coordinate given the first:
/// T(x1) = arg(sum_x2 exp(2 pi i x2) pair(x1, x2) / w(x1)) / (2 pi), wrapped
/// into [0, 1). w is the row marginal of `pair` or `mu1`.
MapEstimate circular_map_extract(const DiscreteMeasure& pair, const DiscreteMeasure& mu1,
                                 Conditioning mode = Conditioning::row_marginal);

/// min(|a - b|, 1 - |a - b|) after reducing both to [0, 1).
double circular_distance(double a, double b);

struct MapError {
  double l1 = 0.0;
  double linf = 0.0;
  double coverage = 0.0;
};

/// Weighted circular errors over the valid points; l1 is renormalized by the
/// valid weight, coverage is the valid share of the weight.
MapError map_error(const MapEstimate& est, const MapTable& ref, const DiscreteMeasure& weight);

/// The identity map on the grid, all points valid.
MapEstimate identity_estimate(int n_x);

}  // namespace mmot
