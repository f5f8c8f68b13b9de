#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "mmot/cost.hpp"
#include "mmot/errors.hpp"

using namespace mmot;

TEST_CASE("static cost examples") {
  const CostKind pair{CostType::quadratic_pairwise};
  CHECK(static_cost(CouplingTable{2, 10, {{{2, 5}, 1.0}}}, pair) == doctest::Approx(0.09));
  CHECK(static_cost(CouplingTable{2, 10, {}}, pair) == 0.0);
  CHECK(static_cost(CouplingTable{3, 2, {{{0, 1, 0}, 1.0}}}, pair) == doctest::Approx(0.25 + 0 + 0.25));
  const std::vector<double> v{0.0, 0.5, 1.0};
  CHECK(pair.evaluate(v) == doctest::Approx(1.5));
  const std::vector<double> w{1.0, 0.0, 0.0};
  CHECK(CostKind{CostType::quadratic_full}.evaluate(w) == doctest::Approx(0.5));
  CHECK(CostKind{CostType::quadratic_full, 3.0}.evaluate(w) == doctest::Approx(1.5));
  CHECK_THROWS_AS(cost_type_from_string("cubic"), ValidationError);
}

TEST_CASE("channel maps factor the cost") {
  std::mt19937_64 rng(2);
  for (auto type : {CostType::quadratic_pairwise, CostType::quadratic_full}) {
    const CostKind c{type, 2.5};
    for (int k = 2; k <= 4; ++k) {
      CHECK(c.channels(k) == (type == CostType::quadratic_pairwise ? k * (k - 1) / 2 : k));
      const auto m = testing::random_vector(rng, k);
      std::vector<double> ch(c.channels(k));
      c.apply_channels(m, ch);
      CHECK(testing::dot(ch, ch) == doctest::Approx(c.evaluate(m)));
      const auto y = testing::random_vector(rng, ch.size());
      std::vector<double> back(k, 0.0);
      c.apply_channels_adjoint(y, back);
      CHECK(testing::dot(ch, y) == doctest::Approx(testing::dot(m, back)));
    }
  }
}

TEST_CASE("pairwise differences") {
  GridSpec g{3, 1, 2};
  CenteredField u(g);
  for (std::size_t i = 0; i < g.centered_slots(); ++i) {
    u.momentum(0)[i] = 1.0;
    u.momentum(1)[i] = 1.0;
    u.momentum(2)[i] = 1.0;
  }
  for (double v : pairwise_diff(u)) CHECK(v == 0.0);

  GridSpec g2{2, 1, 2};
  CenteredField w(g2);
  w.momentum(0)[0] = 3.0;
  w.momentum(1)[0] = 1.0;
  CHECK(pairwise_diff(w)[0] == doctest::Approx(2.0));

  std::mt19937_64 rng(4);
  GridSpec g3{3, 2, 3};
  for (int trial = 0; trial < 10; ++trial) {
    const CenteredField c = testing::random_centered(rng, g3);
    const auto y = testing::random_vector(rng, 3 * g3.centered_slots());
    const double lhs = testing::dot(pairwise_diff(c), y);
    const double rhs = testing::dot(c.values(), pairwise_diff_adjoint(y, g3).values());
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("dynamic cost") {
  GridSpec g{2, 3, 4};
  const CostKind full{CostType::quadratic_full};
  CenteredField u(g);
  for (double& v : u.pi()) v = 1.0 / 16;
  CHECK(dynamic_cost(u, full, g) == 0.0);
  const double c = 0.7;
  for (std::size_t i = 0; i < g.centered_slots(); ++i) u.momentum(0)[i] = c / 16;
  CHECK(dynamic_cost(u, full, g) == doctest::Approx(0.5 * c * c));
  u.pi()[5] = 0.0;
  CHECK(std::isinf(dynamic_cost(u, full, g)));
  CHECK(std::isfinite(dynamic_cost(u, full, g, DomainPolicy::positive_part)));
  CHECK(perspective(0.0, std::vector<double>{0.0}) == 0.0);
  CHECK(std::isinf(perspective(-1.0, std::vector<double>{0.0})));
}

TEST_CASE("prox of the perspective: closed cases") {
  auto p = prox_perspective(1.0, {1.0, {0.0}});
  CHECK(p.pi == doctest::Approx(1.0));
  CHECK(p.m[0] == 0.0);
  p = prox_perspective(1.0, {-3.0, {0.0, 0.0}});
  CHECK(p.pi == 0.0);
  CHECK(p.m[1] == 0.0);
  const double s = std::sqrt(2.0);
  p = prox_perspective(0.5, {0.0, {s, 0.0}});
  CHECK(p.pi == doctest::Approx(0.465571231876768).epsilon(1e-9));
  CHECK(p.m[0] == doctest::Approx(s * p.pi / (p.pi + 1.0)));
}

TEST_CASE("prox of the perspective against brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> gam(0.01, 10.0), pi(-5.0, 5.0), mag(0.0, 5.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double g = gam(rng), a = pi(rng), b = mag(rng);
    const auto p = prox_perspective(g, {a, {b, 0.0}});
    const auto [bp, br] = testing::brute_prox(g, a, b);
    CHECK(p.pi == doctest::Approx(bp).epsilon(1e-6));
    CHECK(p.m[0] == doctest::Approx(br).epsilon(1e-6));
  }
}

TEST_CASE("prox of the conjugate via Moreau") {
  auto q = prox_conjugate(1.0, {1.0, {0.0}});
  CHECK(q.pi == doctest::Approx(0.0));
  q = prox_conjugate(3.0, {0.0, {0.0, 0.0}});
  CHECK(q.pi == 0.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-3.0, 3.0), sg(0.1, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = sg(rng);
    const PerspectivePoint p{d(rng), {d(rng), d(rng)}};
    const auto c = prox_conjugate(sigma, p);
    const auto f = prox_perspective(1.0 / sigma, {p.pi / sigma, {p.m[0] / sigma, p.m[1] / sigma}});
    CHECK(p.pi - c.pi == doctest::Approx(sigma * f.pi).epsilon(1e-10));
    CHECK(p.m[1] - c.m[1] == doctest::Approx(sigma * f.m[1]).epsilon(1e-10));
    // The conjugate lives in {a + |b|^2 / 4 <= 0}.
    CHECK(c.pi + 0.25 * (c.m[0] * c.m[0] + c.m[1] * c.m[1]) <= 1e-9);
  }
}

TEST_CASE("semi-convex shift") {
  const CostKind full{CostType::quadratic_full};
  std::vector<DiscreteMeasure> none;
  const auto same = semiconvex_shift(full.function(), 0.0, none);
  CHECK(same.correction == 0.0);
  DiscreteMeasure delta(2, 1, {0.0, 1.0});
  const auto s = semiconvex_shift(full.function(), 2.0, std::vector<DiscreteMeasure>{delta});
  CHECK(s.correction == doctest::Approx(0.25));
  const std::vector<double> v{1.0, 0.0, 0.0};
  CHECK(s.cost(v) == doctest::Approx(0.5 + 1.0));
  CHECK_THROWS_AS(semiconvex_shift(full.function(), -1.0, none), ParameterError);
}

TEST_CASE("rounding-level channels at empty cells are free") {
  GridSpec g{2, 1, 2};
  const CostKind pair{};
  CenteredField u(g);
  u.pi()[1] = 1.0;
  u.pi()[2] = 1.0;
  u.pi()[3] = 1.0;
  u.momentum(0)[0] = 0.1 + 0.2;
  u.momentum(1)[0] = 0.3;
  CHECK(u.momentum(0)[0] != u.momentum(1)[0]);
  CHECK(dynamic_cost(u, pair, g) == 0.0);
  u.momentum(1)[0] = 0.29;
  CHECK(std::isinf(dynamic_cost(u, pair, g)));
}
