#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mmot/grid.hpp"
#include "mmot/measure.hpp"

namespace mmot {

struct ConstraintOptions {
  double diffusion = 0.0;
  double projection_tol = 1e-10;
  /// 0 selects 10 x (number of constraint rows).
  std::size_t max_inner_iterations = 0;
  /// Drop the rows pinning the initial slice to the source.
  bool free_initial = false;
};

/// The affine set A u = b of staggered fields satisfying the discrete
/// continuity equation, the terminal marginals and (optionally) the source.
///
/// Rows are stacked as [continuity (n_t * N) | marginals (k * n_x) | source (N)].
/// A is never assembled; products run matrix-free.
class ConstraintSystem {
 public:
  ConstraintSystem(const GridSpec& grid, std::vector<DiscreteMeasure> marginals, DiscreteMeasure source,
                   ConstraintOptions options = {});

  const GridSpec& grid() const { return grid_; }
  const std::vector<DiscreteMeasure>& marginals() const { return marginals_; }
  const DiscreteMeasure& source() const { return source_; }
  const ConstraintOptions& options() const { return options_; }

  std::size_t continuity_rows() const { return grid_.centered_slots(); }
  std::size_t marginal_rows() const { return static_cast<std::size_t>(grid_.k) * grid_.n_x; }
  std::size_t source_rows() const { return options_.free_initial ? 0 : grid_.points(); }
  std::size_t rows() const { return continuity_rows() + marginal_rows() + source_rows(); }
  std::size_t max_inner_iterations() const;

  std::vector<double> apply(const StaggeredField& u) const;
  StaggeredField apply_adjoint(std::span<const double> y) const;
  /// Unchecked variants writing into preallocated storage.
  void apply_into(const StaggeredField& u, std::span<double> out) const;
  void apply_adjoint_into(std::span<const double> y, StaggeredField& out) const;
  const std::vector<double>& rhs() const { return rhs_; }
  /// Squared Euclidean norms of the rows of A (Jacobi preconditioner).
  const std::vector<double>& row_norms() const { return row_norms_; }

 private:

  GridSpec grid_;
  std::vector<DiscreteMeasure> marginals_;
  DiscreteMeasure source_;
  ConstraintOptions options_;
  std::vector<double> rhs_;
  std::vector<double> row_norms_;
  std::vector<std::vector<std::size_t>> prev_;  // prev_[l][x] = x - e_l (periodic)
  std::vector<std::vector<std::size_t>> next_;  // next_[l][x] = x + e_l (periodic)
};

/// Euclidean projection onto {A u = b}: u - A^T (A A^T)^+ (A u - b).
///
/// The multiplier system is solved by Jacobi-preconditioned conjugate
/// gradients; `multiplier`, when given, is used as warm start and receives
/// the final multiplier. Throws ConvergenceError when the inner solve runs out
/// of iterations.
StaggeredField project(const StaggeredField& u, const ConstraintSystem& c,
                       std::vector<double>* multiplier = nullptr);

/// Solves A A^T w = r by the same preconditioned conjugate gradients, warm
/// started from `warm` when its length matches.
std::vector<double> normal_solve(const ConstraintSystem& c, std::span<const double> r,
                                 const std::vector<double>* warm = nullptr);

struct ResidualReport {
  double continuity_inf = 0.0;
  double marginal_inf = 0.0;
  double source_inf = 0.0;
  double min_mass = 0.0;

  double total() const { return continuity_inf + marginal_inf + source_inf; }
};

ResidualReport residual_report(const StaggeredField& u, const ConstraintSystem& c);

}  // namespace mmot
