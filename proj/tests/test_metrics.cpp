#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "generators.hpp"
#include "robq/error.hpp"
#include "robq/metrics.hpp"

using namespace robq;

TEST_CASE("top_two orders by probability with lowest-index ties") {
  CHECK(top_two(ClassDistribution({0.6, 0.3, 0.1})) == std::pair<ClassIndex, ClassIndex>{0, 1});
  CHECK(top_two(ClassDistribution({1.0 / 3, 1.0 / 3, 1.0 / 3})) == std::pair<ClassIndex, ClassIndex>{0, 1});
  CHECK(top_two(ClassDistribution({0.1, 0.2, 0.7})) == std::pair<ClassIndex, ClassIndex>{2, 1});
  CHECK(top_two(ClassDistribution({0.2, 0.4, 0.4})) == std::pair<ClassIndex, ClassIndex>{1, 2});
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(top_two(one), InvalidInput);
}

TEST_CASE("r_cor and r_star closed forms") {
  // (0.6 - 0.3) / 0.6 and 0.6 / 0.3 by hand.
  CHECK(robustness_cor(ClassDistribution({0.6, 0.3, 0.1})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(robustness_star(ClassDistribution({0.6, 0.3, 0.1})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(robustness_cor(ClassDistribution({1.0 / 3, 1.0 / 3, 1.0 / 3})) == 0.0);
  CHECK(robustness_star(ClassDistribution({1.0 / 3, 1.0 / 3, 1.0 / 3})) == 1.0);
  CHECK(robustness_cor(ClassDistribution({1.0, 0.0})) == 1.0);
  CHECK(robustness_star(ClassDistribution({1.0, 0.0})) == kInfinity);

  const auto s = robustness(ClassDistribution({0.1, 0.2, 0.7}));
  CHECK(s.top == 2);
  CHECK(s.runner_up == 1);
  CHECK(s.r_star == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("ClassDistribution rejects invalid input instead of renormalizing") {
  CHECK_THROWS_AS(ClassDistribution({1.0}), InvalidInput);
  CHECK_THROWS_AS(ClassDistribution({0.5, 0.48}), InvalidInput);
  CHECK_THROWS_AS(ClassDistribution({0.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(ClassDistribution({1.2, -0.2}), InvalidInput);
  CHECK_THROWS_AS(ClassDistribution({std::nan(""), 1.0}), InvalidInput);
  CHECK_NOTHROW(ClassDistribution({0.5, 0.5 + 9e-7}));
}

TEST_CASE("star_to_cor and cor_to_star") {
  CHECK(star_to_cor(2.0) == 0.5);
  CHECK(star_to_cor(1.0) == 0.0);
  CHECK(star_to_cor(kInfinity) == 1.0);
  CHECK(cor_to_star(0.5) == 2.0);
  CHECK(cor_to_star(1.0) == kInfinity);
  CHECK_THROWS_AS(star_to_cor(0.99), InvalidInput);
  CHECK_THROWS_AS(star_to_cor(std::nan("")), InvalidInput);
  CHECK_THROWS_AS(cor_to_star(-0.1), InvalidInput);
  CHECK_THROWS_AS(cor_to_star(1.1), InvalidInput);
}

TEST_CASE("property: ranges, monotone consistency and permutation equivariance") {
  std::mt19937_64 rng(11);
  std::vector<ClassDistribution> dists;
  for (int i = 0; i < 2000; ++i) dists.push_back(testing::random_distribution(rng, 2 + i % 6, i % 3 == 0));

  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto s = robustness(dists[i]);
    REQUIRE(s.r_cor >= 0.0);
    REQUIRE(s.r_cor <= 1.0);
    REQUIRE(s.r_star >= 1.0);
    REQUIRE(s.top != s.runner_up);
    REQUIRE((s.r_cor == 1.0) == (s.r_star == kInfinity));
    REQUIRE((s.r_cor == 0.0) == (dists[i][s.top] == dists[i][s.runner_up]));

    const auto& other = dists[(i * 7 + 3) % dists.size()];
    const auto t = robustness(other);
    REQUIRE((s.r_cor < t.r_cor) == (s.r_star < t.r_star));

    // Reverse the class order.
    const auto p = dists[i].probs();
    std::vector<double> rev(p.rbegin(), p.rend());
    const auto r = robustness(ClassDistribution(rev));
    REQUIRE(r.r_cor == s.r_cor);
    REQUIRE(r.r_star == s.r_star);
    const std::size_t k = p.size();
    if (p[s.top] != p[s.runner_up] && std::count(p.begin(), p.end(), p[s.runner_up]) == 1) {
      REQUIRE(r.top == k - 1 - s.top);
      REQUIRE(r.runner_up == k - 1 - s.runner_up);
    }
  }
}

TEST_CASE("property: joint and conditional forms agree") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(1e-4, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto cond = testing::random_distribution(rng, 2 + i % 5, i % 4 == 0);
    const double px = scale(rng);
    std::vector<double> joint;
    for (double v : cond.probs()) joint.push_back(v * px);
    const auto a = robustness(cond);
    const auto b = robustness_from_joint(joint);
    REQUIRE(a.top == b.top);
    REQUIRE(a.runner_up == b.runner_up);
    REQUIRE(b.r_cor == doctest::Approx(a.r_cor).epsilon(1e-12));
  }
  const std::vector<double> zeros{0.0, 0.0};
  CHECK_THROWS_AS(robustness_from_joint(zeros), InvalidInput);
}
