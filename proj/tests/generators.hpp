#pragma once

// Random inputs for the property tests.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "robq/metrics.hpp"
#include "robq/prediction_table.hpp"

namespace robq::testing {

// Flat Dirichlet draw via normalized exponentials; `spike` occasionally
// zeroes entries to exercise the r_star = inf paths.
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k, bool spike = false) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = e(rng);
    if (spike && u(rng) < 0.2) v = 0.0;
    total += v;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    total = 1.0;
  }
  for (auto& v : p) v /= total;
  return p;
}

inline ClassDistribution random_distribution(std::mt19937_64& rng, std::size_t k, bool spike = false) {
  return ClassDistribution(random_simplex(rng, k, spike));
}

// Binary distribution whose top class is `label` when `correct`, the other
// class otherwise, with top probability in (0.5, 1].
inline ClassDistribution binary_prediction(std::mt19937_64& rng, ClassIndex label, bool correct) {
  std::uniform_real_distribution<double> u(0.5, 1.0);
  double top = u(rng);
  if (top == 0.5) top = 0.75;
  const ClassIndex predicted = correct ? label : 1 - label;
  std::vector<double> p(2);
  p[predicted] = top;
  p[1 - predicted] = 1.0 - top;
  return ClassDistribution(p);
}

// Two aligned random tables over the same labels, K classes.
inline std::pair<PredictionTable, PredictionTable> random_table_pair(std::mt19937_64& rng, std::size_t n,
                                                                     std::size_t k) {
  std::uniform_int_distribution<std::size_t> label(0, k - 1);
  std::vector<PredictionRow> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassIndex y = label(rng);
    const std::string id = "i" + std::to_string(i);
    a.push_back({id, y, random_distribution(rng, k, true)});
    b.push_back({id, y, random_distribution(rng, k, true)});
  }
  return {PredictionTable("m1", k, std::move(a)), PredictionTable("m2", k, std::move(b))};
}

}  // namespace robq::testing
