#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mmot/duality.hpp"
#include "mmot/errors.hpp"
#include "mmot/flows.hpp"
#include "mmot/oracle.hpp"

using namespace mmot;

namespace {

double grid_legendre(const CostKind& cost, std::span<const double> y) {
  // max over v of <v, y> - L(v) on a fine grid of R^2.
  double best = -INFINITY;
  const int n = 801;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::vector<double> v{-2.0 + 4.0 * i / (n - 1), -2.0 + 4.0 * j / (n - 1)};
      best = std::max(best, v[0] * y[0] + v[1] * y[1] - cost.evaluate(v));
    }
  return best;
}

DualPotentials sampled(const GridSpec& g, double eps) {
  DualPotentials p(g);
  for (int t = 0; t <= g.n_t; ++t) {
    const double tt = static_cast<double>(t) / g.n_t;
    auto s = p.slice(t);
    for (std::size_t x = 0; x < g.points(); ++x) {
      double r = 0.0;
      for (int c : g.coords(x)) r += (c * 1.0 / g.n_x) * (c * 1.0 / g.n_x);
      s[x] = r / (2.0 * (tt + eps));
    }
  }
  return p;
}

}  // namespace

TEST_CASE("Legendre transforms") {
  const CostKind full{CostType::quadratic_full};
  const CostKind pair{CostType::quadratic_pairwise};
  CHECK(legendre(full, std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(std::isinf(legendre(pair, std::vector<double>{1.0, 1.0})));
  const std::vector<double> y{1.0, -1.0};
  CHECK(legendre(pair, y) == doctest::Approx(0.25));
  CHECK(grid_legendre(pair, y) == doctest::Approx(0.25).epsilon(1e-4));
  const std::vector<double> z{0.3, -0.7};
  CHECK(legendre(full, z) == doctest::Approx(grid_legendre(full, z)).epsilon(1e-4));
  CHECK(legendre(CostKind{CostType::quadratic_full, 2.0}, z) == doctest::Approx(0.5 * legendre(full, z)));
}

TEST_CASE("HJ residual") {
  GridSpec g{2, 4, 5};
  DualPotentials zero(g);
  for (auto type : {CostType::quadratic_full, CostType::quadratic_pairwise})
    CHECK(hj_residual(zero, CostKind{type}) == 0.0);
  DualPotentials lin(g);
  for (int t = 0; t <= g.n_t; ++t)
    for (double& v : lin.slice(t)) v = static_cast<double>(t) / g.n_t;
  CHECK(hj_residual(lin, CostKind{}) == doctest::Approx(1.0));
}

TEST_CASE("HJ residual of the sampled analytic solution shrinks with refinement") {
  const CostKind full{CostType::quadratic_full};
  double previous = INFINITY;
  for (int n : {8, 16, 32}) {
    const double r = std::abs(hj_residual(sampled(GridSpec{2, n, n}, 0.5), full));
    CHECK(r < previous);
    previous = r;
  }
  CHECK(previous < 0.2);
}

TEST_CASE("domination and dual objective") {
  GridSpec g{2, 2, 4};
  const std::vector<DiscreteMeasure> mus(2, DiscreteMeasure::uniform(4));
  DualPotentials p(g);
  CHECK(domination_check(p, mus) == 0.0);
  for (double& v : p.slice(g.n_t)) v = 1.0;
  CHECK(domination_check(p, mus) == -1.0);

  DualPotentials c(g);
  for (double& v : c.lambda_l[0]) v = 0.3;
  for (double& v : c.lambda_l[1]) v = 0.5;
  for (double& v : c.slice(0)) v = 0.1;
  const DiscreteMeasure src = realize_source(SourceSpec::diagonal(DiscreteMeasure::uniform(4)), g);
  CHECK(dual_objective(c, mus, src) == doctest::Approx(0.7));
  CHECK(dual_objective(DualPotentials(g), mus, src) == 0.0);
}

TEST_CASE("Hopf-Lax lift") {
  GridSpec g{2, 1, 8};
  const CostKind full{CostType::quadratic_full};
  const std::vector<double> zero(g.points(), 0.0);
  for (double v : hopf_lax_lift(zero, full, 0.3, g)) CHECK(v == 0.0);

  const std::vector<double> a{0.4, -0.3};
  std::vector<double> linear(g.points());
  for (std::size_t x = 0; x < g.points(); ++x) {
    const auto c = g.coords(x);
    linear[x] = a[0] * c[0] / 8.0 + a[1] * c[1] / 8.0;
  }
  const double t = 0.5;
  const auto lifted = hopf_lax_lift(linear, full, t, g);
  // Interior points, where the minimiser y - t a stays in the box.
  for (std::size_t y = 0; y < g.points(); ++y) {
    const auto c = g.coords(y);
    if (c[0] < 1 || c[1] > 6) continue;
    const double expect = linear[y] - t * (a[0] * a[0] + a[1] * a[1]) / 2.0;
    CHECK(std::abs(lifted[y] - expect) <= 1.0 / 8);
  }

  std::mt19937_64 rng(51);
  const auto lo = testing::random_vector(rng, g.points());
  std::vector<double> hi(lo);
  for (double& v : hi) v += 0.1;
  hi[3] += 1.0;
  const CostKind pair{};
  const auto l1 = hopf_lax_lift(lo, pair, 0.7, g);
  const auto l2 = hopf_lax_lift(hi, pair, 0.7, g);
  for (std::size_t i = 0; i < l1.size(); ++i) CHECK(l1[i] <= l2[i]);
  CHECK_THROWS_AS(hopf_lax_lift(lo, pair, 0.0, g), ParameterError);
}

TEST_CASE("lifted static potentials dominate and become HJ feasible") {
  std::mt19937_64 rng(52);
  GridSpec g{2, 5, 5};
  const CostKind pair{};
  const std::vector<DiscreteMeasure> mus{testing::random_measure(rng, 5), testing::random_measure(rng, 5)};
  std::vector<std::vector<double>> lam{testing::random_vector(rng, 5), testing::random_vector(rng, 5)};
  DualPotentials p = lift_static_duals(lam, pair, g);
  CHECK(domination_check(p, mus) <= 1e-8);
  const DiscreteMeasure src = realize_source(SourceSpec::diagonal(mus[0]), g);
  const double before = dual_objective(p, mus, src);
  const double shift = restore_hj_feasibility(p, pair);
  CHECK(shift >= 0.0);
  CHECK(hj_residual(p, pair) <= 1e-12);
  CHECK(domination_check(p, mus) <= 1e-8);
  CHECK(dual_objective(p, mus, src) == doctest::Approx(before - shift));
}

TEST_CASE("weak duality against feasible flows") {
  std::mt19937_64 rng(53);
  const int n = 8;
  GridSpec g{2, n, n};
  const CostKind pair{};
  const std::vector<DiscreteMeasure> mus{preset_marginal(Preset::sine_bump, n), preset_marginal(Preset::tent, n)};
  const DiscreteMeasure src = realize_source(SourceSpec::diagonal(DiscreteMeasure::uniform(n)), g);
  const CouplingTable gamma = comonotone_coupling(mus);
  const double primal =
      dynamic_cost(interp(flow_from_coupling(src, gamma, sorted_pairing(src, gamma), g), g), pair, g);
  REQUIRE(std::isfinite(primal));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> lam{testing::random_vector(rng, n), testing::random_vector(rng, n)};
    DualPotentials p = lift_static_duals(lam, pair, g);
    restore_hj_feasibility(p, pair);
    REQUIRE(hj_residual(p, pair) <= 1e-12);
    REQUIRE(domination_check(p, mus) <= 1e-12);
    CHECK(dual_objective(p, mus, src) <= primal + 1e-6);
  }
}
