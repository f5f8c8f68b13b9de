#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mmot/measure.hpp"

namespace mmot {

/// Coefficients of the discrete continuity equation.
///  - divided_differences: (n_t, n_x), true divided differences.
///  - reciprocal_coefficients: (1/n_t, 1/n_x). Defines the same constraint
///    set as divided_differences whenever n_t == n_x.
enum class ScalingMode { divided_differences, reciprocal_coefficients };

std::string to_string(ScalingMode mode);
ScalingMode scaling_mode_from_string(const std::string& name);

/// Space-time grid on [0,1] x T^k.
///
/// Centered times are (i + 1/2)/n_t for i < n_t, staggered times are i/n_t for
/// i <= n_t. Centered space points are j/n_x per axis, staggered space points
/// are (j + 1/2)/n_x; both carry n_x points per axis on the torus.
struct GridSpec {
  int k = 2;
  int n_t = 1;
  int n_x = 2;
  ScalingMode scaling = ScalingMode::divided_differences;

  void validate() const;

  /// n_x^k, the number of points of the spatial product grid.
  std::size_t points() const;
  std::size_t centered_slots() const { return static_cast<std::size_t>(n_t) * points(); }
  double time_coef() const;
  double space_coef() const;
  /// Quadrature weight of one centered cell for objective values. Fields hold
  /// cell masses, so only the time step remains.
  double cell_weight() const { return 1.0 / n_t; }

  std::size_t stride(int axis) const;
  std::size_t flat(std::span<const int> coords) const;
  std::vector<int> coords(std::size_t flat) const;
  /// Flat index of the neighbour one cell away along `axis` (periodic).
  std::size_t shift(std::size_t flat, int axis, int offset) const;
  double position(int index) const { return static_cast<double>(index) / n_x; }

  bool operator==(const GridSpec&) const = default;
};

/// Staggered unknowns: mass on staggered times x centered space, and k
/// momentum components on centered times, component l staggered along axis l.
/// Node j of axis l in momentum component l sits at (j + 1/2)/n_x.
class StaggeredField {
 public:
  StaggeredField() = default;
  explicit StaggeredField(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> pi();
  std::span<const double> pi() const;
  std::span<double> pi_slice(int t);
  std::span<const double> pi_slice(int t) const;
  std::span<double> momentum(int l);
  std::span<const double> momentum(int l) const;
  std::span<double> momentum_slice(int l, int t);
  std::span<const double> momentum_slice(int l, int t) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Unknowns colocated on the centered grid: mass plus k momentum components.
class CenteredField {
 public:
  CenteredField() = default;
  explicit CenteredField(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> pi();
  std::span<const double> pi() const;
  std::span<double> momentum(int l);
  std::span<const double> momentum(int l) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Throws DimensionError unless the field was built for `grid`.
void check_conforms(const StaggeredField& u, const GridSpec& grid);
void check_conforms(const CenteredField& u, const GridSpec& grid);

/// Two-point averages onto the centered grid. Momentum component l averages
/// only along its own staggered axis.
CenteredField interp(const StaggeredField& u, const GridSpec& grid);

/// Transpose of interp under the plain Euclidean inner products.
StaggeredField interp_adjoint(const CenteredField& u, const GridSpec& grid);

/// Periodic second difference summed over axes, scaled by n_x^2.
void laplacian(std::span<const double> in, std::span<double> out, const GridSpec& grid);

/// Residual of the discrete continuity equation on every centered cell,
///   c_t [pi(t+) - pi(t-)] + c_x sum_l [m_l(x + e_l/2) - m_l(x - e_l/2)] - eps Lap(avg pi).
std::vector<double> divergence_residual(const StaggeredField& u, const GridSpec& grid,
                                        double diffusion);

}  // namespace mmot
