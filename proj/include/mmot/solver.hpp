#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmot/constraints.hpp"
#include "mmot/cost.hpp"
#include "mmot/grid.hpp"

namespace mmot {

struct SolverParams {
  double theta = 1.0;
  double sigma = 85.0;
  double tau = 0.1;
  int iterations = 5000;
  int log_every = 10;
  bool enforce_step_rule = false;
  std::uint64_t seed = 0;  ///< start vector of the operator-norm power iteration
  int threads = 1;

  void validate() const;
};

/// Matrix-free linear map with its transpose.
struct LinearOperator {
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::function<void(std::span<const double>, std::span<double>)> adjoint;
};

struct OpNormEstimate {
  double value = 0.0;
  /// sqrt of the Rayleigh quotient after each power step.
  std::vector<double> history;
};

/// Power iteration on op^T op from a seeded random start: at most 200 steps,
/// stopping once the Rayleigh quotient changes by <= 1e-10 relatively. The
/// result is a lower bound on the operator norm; `trials` independent starts
/// are run and the largest estimate kept.
OpNormEstimate estimate_opnorm(const LinearOperator& op, int trials = 1, std::uint64_t seed = 0);

/// K = S o I: centered mass followed by the unit-scale cost channels of the
/// centered momentum. Dual vectors are channel-major, mass channel first. The
/// cost scale enters through the dual prox, not through K.
class CouplingOperator {
 public:
  CouplingOperator(const GridSpec& grid, const CostKind& cost);

  const GridSpec& grid() const { return grid_; }
  const CostKind& cost() const { return cost_; }
  int channels() const { return channels_; }
  std::size_t dual_size() const { return static_cast<std::size_t>(channels_ + 1) * grid_.centered_slots(); }

  std::vector<double> apply(const StaggeredField& u) const;
  StaggeredField adjoint(std::span<const double> g) const;
  void apply_into(const StaggeredField& u, std::span<double> out) const;
  void adjoint_into(std::span<const double> g, StaggeredField& out) const;
  LinearOperator as_linear_operator() const;

 private:
  GridSpec grid_;
  CostKind cost_;
  CostKind unit_;
  int channels_;
  std::vector<std::vector<std::size_t>> prev_;
};

struct SolverState {
  StaggeredField h;               ///< primal iterate
  StaggeredField f;               ///< extrapolated primal iterate
  std::vector<double> g;          ///< dual iterate on the centered grid
  std::vector<double> multiplier; ///< warm start of the projection
  int iteration = 0;
  double step_norm = 0.0;         ///< |h_new - h_old|
};

struct DiagnosticsRow {
  int iteration = 0;
  double objective = 0.0;
  double continuity_inf = 0.0;
  double marginal_inf = 0.0;
  double source_inf = 0.0;
  double min_mass = 0.0;
  double step_norm = 0.0;
};

using SolverDiagnostics = std::vector<DiagnosticsRow>;

/// Linear-in-time blend from the source to the product of the marginals,
/// zero momentum, projected onto the constraint set.
StaggeredField initial_guess(const ConstraintSystem& c);

SolverState make_state(const ConstraintSystem& c, const CouplingOperator& k, const StaggeredField& init);

/// One primal-dual iteration:
///   g <- prox_{sigma F*}(g + sigma K f)
///   h <- proj(h - tau K^T g)
///   f <- h + theta (h - h_old)
SolverState pd_step(const SolverState& state, const SolverParams& params, const ConstraintSystem& c,
                    const CouplingOperator& k);
SolverState pd_step(const SolverState& state, const SolverParams& params, const ConstraintSystem& c,
                    const CostKind& cost);

struct SolveResult {
  StaggeredField staggered;
  CenteredField centered;
  SolverDiagnostics diagnostics;
  SolverState state;
  double opnorm = 0.0;
  double step_product = 0.0;  ///< sigma * tau * |K|^2
  std::vector<std::string> warnings;
};

/// Called with every logged row as soon as it is computed.
using DiagnosticsObserver = std::function<void(const DiagnosticsRow&)>;

/// Runs params.iterations primal-dual steps. Throws ParameterError when the
/// step rule sigma tau |K|^2 < 1 is enforced and violated.
SolveResult solve(const ConstraintSystem& c, const CostKind& cost, const SolverParams& params,
                  const std::optional<StaggeredField>& init = std::nullopt,
                  const DiagnosticsObserver& observer = {});

/// Objective value used in diagnostics: positive-part dynamic cost of I(h).
double solver_objective(const StaggeredField& h, const CostKind& cost);

/// Primal objective minus the dual value certified by the dual iterate, or
/// +inf when the dual iterate is not feasible to within `dual_tol`.
double primal_dual_gap_probe(const SolverState& state, const ConstraintSystem& c, const CostKind& cost,
                             double dual_tol = 1e-6);

}  // namespace mmot
