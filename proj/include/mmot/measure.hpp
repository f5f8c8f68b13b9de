#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mmot {

/// Nonnegative cell masses on a 1D grid (dims == 1) or on the dims-fold
/// product grid, row-major with axis 0 slowest.
struct DiscreteMeasure {
  int n_x = 0;
  int dims = 1;
  std::vector<double> mass;

  DiscreteMeasure() = default;
  DiscreteMeasure(int n, int d);
  DiscreteMeasure(int n, int d, std::vector<double> m);

  std::size_t size() const { return mass.size(); }
  double total() const;
  /// Smallest entry; negative values are allowed in intermediate results.
  double min() const;
  void normalize();
  void validate(double tol = 1e-12) const;

  static DiscreteMeasure uniform(int n, int d = 1);
};

/// One atom of a coupling: grid indices per axis plus its mass.
struct Atom {
  std::vector<int> coords;
  double mass = 0.0;
};

/// Sparse k-marginal coupling on the n_x grid.
struct CouplingTable {
  int k = 0;
  int n_x = 0;
  std::vector<Atom> atoms;

  double total() const;
  /// Dense product-grid measure with the atom masses accumulated.
  DiscreteMeasure to_dense() const;
  /// Atoms of a dense measure, skipping cells with mass <= threshold.
  static CouplingTable from_dense(const DiscreteMeasure& m, double threshold = 0.0);
};

/// Sum of all axes except `axis`. Throws ValidationError on a bad axis.
DiscreteMeasure marginalize(const DiscreteMeasure& mass, int axis);

/// Marginal of a coupling table along `axis`.
DiscreteMeasure marginalize(const CouplingTable& gamma, int axis);

/// Row-major product of 1D measures.
DiscreteMeasure product(std::span<const DiscreteMeasure> factors);

}  // namespace mmot
