#pragma once

#include <vector>

#include "mmot/grid.hpp"
#include "mmot/measure.hpp"

namespace mmot {

/// Initial measure p on the product grid.
struct SourceSpec {
  enum class Kind { diagonal, delta, explicit_mass };

  Kind kind = Kind::diagonal;
  DiscreteMeasure nu;         ///< diagonal: 1D measure placed at (x, ..., x)
  std::vector<int> point;     ///< delta: multi-index of the atom
  DiscreteMeasure mass;       ///< explicit_mass: product-grid measure

  static SourceSpec diagonal(DiscreteMeasure nu);
  static SourceSpec delta(std::vector<int> point);
  static SourceSpec explicit_measure(DiscreteMeasure mass);
};

DiscreteMeasure realize_source(const SourceSpec& s, const GridSpec& g);

/// Joint law of (source atom, coupling atom). Entry coords are
/// (source flat index, coupling atom index).
struct Pairing {
  struct Entry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
  };
  std::vector<Entry> entries;
};

/// Independent product of the source and the coupling.
Pairing independent_pairing(const DiscreteMeasure& source, const CouplingTable& gamma);

/// North-west corner rule after sorting both sides by the sum of their
/// coordinates; pairs low with low.
Pairing sorted_pairing(const DiscreteMeasure& source, const CouplingTable& gamma);

/// Superposition of straight lines from source atoms to coupling atoms.
/// Masses are splatted multilinearly at the staggered times; momenta are the
/// face fluxes that move one splat to the next, so the result satisfies the
/// discrete continuity equation (divided differences, no diffusion) exactly.
/// Throws ValidationError when the pairing marginals do not match.
StaggeredField flow_from_coupling(const DiscreteMeasure& source, const CouplingTable& gamma,
                                  const Pairing& pairing, const GridSpec& g);
StaggeredField flow_from_coupling(const DiscreteMeasure& source, const CouplingTable& gamma,
                                  const GridSpec& g);

/// Symmetric nonnegative kernel on the stencil {-r, ..., r}^k, weights
/// row-major with axis 0 slowest, summing to 1.
struct ProbabilityKernel {
  int k = 2;
  int radius = 0;
  std::vector<double> weights;

  void validate() const;
  static ProbabilityKernel identity(int k);
  /// Product of per-axis weights w[|offset|], normalized.
  static ProbabilityKernel separable(int k, const std::vector<double>& half_profile);
};

/// Periodic spatial convolution of every time slice and component.
StaggeredField smooth_flow(const StaggeredField& u, const ProbabilityKernel& kernel);

}  // namespace mmot
