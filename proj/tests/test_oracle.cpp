#include <doctest.h>

#include <cmath>

#include "robq/error.hpp"
#include "robq/oracle.hpp"

using namespace robq;
using namespace robq::oracle;

TEST_CASE("dstar_finite on hand-computed pairs") {
  const FiniteJointModel even(2, 1, {0.5, 0.5});
  CHECK(dstar_finite(even, even) == 1.0);
  // L = (0.4/0.6, 0.6/0.4) -> 1.5 / (2/3) = 2.25
  CHECK(dstar_finite(FiniteJointModel(2, 1, {0.6, 0.4}), FiniteJointModel(2, 1, {0.4, 0.6})) ==
        doctest::Approx(2.25).epsilon(1e-12));
  // L = (0.5, 1.5) -> 3
  CHECK(dstar_finite(even, FiniteJointModel(2, 1, {0.25, 0.75})) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dstar_finite absolute continuity and shape checks") {
  const FiniteJointModel p(2, 2, {0.5, 0.0, 0.25, 0.25});
  const FiniteJointModel q(2, 2, {0.4, 0.1, 0.25, 0.25});
  CHECK(dstar_finite(p, q) == kInfinity);
  CHECK(dstar_finite(q, p) == kInfinity);
  CHECK_THROWS_AS(dstar_finite(p, FiniteJointModel(2, 1, {0.5, 0.5})), InvalidInput);
  CHECK_THROWS_AS(FiniteJointModel(2, 2, {0.5, 0.0, 0.5, 0.0}), InvalidInput);  // empty column
  CHECK_THROWS_AS(FiniteJointModel(2, 1, {0.5, 0.4}), InvalidInput);
}

TEST_CASE("witness for conditional [0.6, 0.3, 0.1]") {
  // pi1 = 0.6, pi2 = 0.3, r = 2:
  // lambda- = 0.9 / 1.2 = 0.75, lambda+ = 1.8 / 1.2 = 1.5,
  // E[L] = 0.45 + 0.45 + 0.1 = 1.
  const FiniteJointModel p(3, 1, {0.6, 0.3, 0.1});
  const auto w = build_witness(p, 0);
  CHECK(w.construction.pi1 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.construction.pi2 == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w.construction.ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w.construction.lambda_minus == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.construction.lambda_plus == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::abs(w.construction.expected_likelihood_ratio() - 1.0) <= 1e-12);
  CHECK(dstar_finite(p, w.perturbed) == doctest::Approx(2.0).epsilon(1e-12));
  const auto q = w.perturbed.conditional(0);
  CHECK(std::abs(q[0] - q[1]) <= 1e-9);
  CHECK(prediction_flipped(w.perturbed, 0, 0));
}

TEST_CASE("witness for a tie is the identity") {
  const FiniteJointModel p(2, 2, {0.2, 0.3, 0.2, 0.3});
  const auto w = build_witness(p, 0);
  CHECK(w.construction.lambda_minus == 1.0);
  CHECK(w.construction.lambda_plus == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(w.perturbed.mass()[i] == p.mass()[i]);
}

TEST_CASE("witness needs a positive runner-up") {
  const FiniteJointModel p(3, 2, {0.5, 0.1, 0.0, 0.2, 0.0, 0.2});
  CHECK_THROWS_AS(build_witness(p, 0), NoWitness);
  CHECK_THROWS_AS(build_witness(p, 5), InvalidInput);
}

TEST_CASE("property: witness dissimilarity equals lambda+ / lambda- = r_star") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_joint_model(2 + trial % 4, 1 + trial % 5, rng);
    for (std::size_t x = 0; x < p.feature_count(); ++x) {
      const auto w = build_witness(p, x);
      const double d = dstar_finite(p, w.perturbed);
      REQUIRE(d == doctest::Approx(w.construction.lambda_plus / w.construction.lambda_minus).epsilon(1e-12));
      REQUIRE(d == doctest::Approx(robustness(p.conditional(x)).r_star).epsilon(1e-12));
      REQUIRE(w.construction.lambda_minus <= 1.0);
      REQUIRE(w.construction.lambda_plus >= 1.0);
    }
  }
}

TEST_CASE("property: dstar_finite >= 1, symmetric, 1 iff equal") {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_joint_model(3, 3, rng);
    const auto q = random_joint_model(3, 3, rng);
    const double pq = dstar_finite(p, q);
    REQUIRE(pq >= 1.0);
    REQUIRE(pq > 1.0);
    REQUIRE(pq == doctest::Approx(dstar_finite(q, p)).epsilon(1e-12));
    REQUIRE(dstar_finite(p, p) == 1.0);
  }
}

TEST_CASE("min_flipping_dissimilarity examples") {
  SUBCASE("conditional [0.6, 0.3, 0.1] -> about 2") {
    const FiniteJointModel p(3, 2, {0.3, 0.2, 0.15, 0.2, 0.05, 0.1});
    const auto res = min_flipping_dissimilarity(p, 0, kDefaultSearchBudget, 1);
    REQUIRE(res);
    CHECK(res->dissimilarity >= 2.0 * (1 - 1e-9));
    CHECK(res->dissimilarity <= 2.0 + 1e-9);
    CHECK(res->candidates_evaluated <= kDefaultSearchBudget);
  }
  SUBCASE("tie is already flipped") {
    const FiniteJointModel p(2, 1, {0.5, 0.5});
    const auto res = min_flipping_dissimilarity(p, 0, 100, 1);
    REQUIRE(res);
    CHECK(res->dissimilarity == 1.0);
  }
  SUBCASE("no mass besides the top class") {
    const FiniteJointModel p(3, 2, {0.5, 0.1, 0.0, 0.2, 0.0, 0.2});
    CHECK_FALSE(min_flipping_dissimilarity(p, 0, 100, 1).has_value());
  }
  SUBCASE("budget must be positive") {
    const FiniteJointModel p(2, 1, {0.5, 0.5});
    CHECK_THROWS_AS(min_flipping_dissimilarity(p, 0, 0, 1), InvalidInput);
  }
}

TEST_CASE("independent grid oracle agrees with the closed form on K=3, M=1") {
  // Brute force over log L on a grid (L of class 0 fixed at 1 by scale
  // invariance). The smallest flipping spread must approach r_star from above.
  const std::vector<double> col{0.5, 0.3, 0.2};
  const double r_star = 0.5 / 0.3;
  double best = kInfinity;
  const int steps = 400;
  const double span = 1.5;
  for (int a = -steps; a <= steps; ++a) {
    for (int b = -steps; b <= steps; ++b) {
      const double l1 = std::exp(span * a / steps);
      const double l2 = std::exp(span * b / steps);
      const double q0 = col[0], q1 = l1 * col[1], q2 = l2 * col[2];
      if (q1 < q0 && q2 < q0) continue;
      const double hi = std::max({1.0, l1, l2});
      const double lo = std::min({1.0, l1, l2});
      best = std::min(best, hi / lo);
    }
  }
  CHECK(best >= r_star * (1 - 1e-12));
  CHECK(best <= r_star * 1.01);

  const FiniteJointModel p(3, 1, {0.5, 0.3, 0.2});
  const auto res = min_flipping_dissimilarity(p, 0, kDefaultSearchBudget, 4);
  REQUIRE(res);
  CHECK(res->dissimilarity <= best + 1e-9);
  CHECK(res->dissimilarity >= r_star * (1 - 1e-9));
}

TEST_CASE("verify_closed_form small run passes and is deterministic") {
  VerificationOptions opt;
  opt.trials = 5;
  opt.search_budget = 2000;
  const auto a = verify_closed_form(opt);
  const auto b = verify_closed_form(opt);
  CHECK(a.passed());
  CHECK(a.checks.size() == 20);
  REQUIRE(b.checks.size() == a.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].searched_minimum == b.checks[i].searched_minimum);
  }
  CHECK(format_report(a, opt).find("PASS") != std::string::npos);
}
