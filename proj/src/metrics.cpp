#include "robq/metrics.hpp"

#include <cmath>
#include <string>

#include "robq/error.hpp"

namespace robq {

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw InvalidInput("class distribution needs at least 2 classes, got " +
                       std::to_string(probs_.size()));
  }
  double sum = 0.0;
  for (std::size_t y = 0; y < probs_.size(); ++y) {
    const double p = probs_[y];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InvalidInput("probability of class " + std::to_string(y) + " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionSumTolerance) {
    throw InvalidInput("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

std::pair<ClassIndex, ClassIndex> top_two(std::span<const double> values) {
  if (values.size() < 2) {
    throw InvalidInput("top_two needs at least 2 classes");
  }
  ClassIndex first = 0;
  for (ClassIndex y = 1; y < values.size(); ++y) {
    if (values[y] > values[first]) first = y;
  }
  ClassIndex second = first == 0 ? 1 : 0;
  for (ClassIndex y = 0; y < values.size(); ++y) {
    if (y != first && values[y] > values[second]) second = y;
  }
  return {first, second};
}

std::pair<ClassIndex, ClassIndex> top_two(const ClassDistribution& dist) {
  return top_two(dist.probs());
}

ClassIndex predicted_class(const ClassDistribution& dist) { return top_two(dist).first; }

namespace {

RobustnessScore score_from_top_two(double p1, double p2, ClassIndex top, ClassIndex runner_up) {
  if (!(p1 > 0.0)) {
    throw InvalidInput("most likely class has zero probability");
  }
  RobustnessScore s{};
  s.top = top;
  s.runner_up = runner_up;
  s.r_cor = (p1 - p2) / p1;
  s.r_star = p2 == 0.0 ? kInfinity : p1 / p2;
  return s;
}

}  // namespace

RobustnessScore robustness(const ClassDistribution& dist) {
  const auto [top, runner_up] = top_two(dist);
  return score_from_top_two(dist[top], dist[runner_up], top, runner_up);
}

double robustness_cor(const ClassDistribution& dist) { return robustness(dist).r_cor; }

double robustness_star(const ClassDistribution& dist) { return robustness(dist).r_star; }

RobustnessScore robustness_from_joint(std::span<const double> joint_column) {
  for (double v : joint_column) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("joint mass must be finite and non-negative");
    }
  }
  const auto [top, runner_up] = top_two(joint_column);
  return score_from_top_two(joint_column[top], joint_column[runner_up], top, runner_up);
}

double star_to_cor(double r_star) {
  if (!(r_star >= 1.0)) {
    throw InvalidInput("r_star must be >= 1");
  }
  if (std::isinf(r_star)) return 1.0;
  return 1.0 - 1.0 / r_star;
}

double cor_to_star(double r_cor) {
  if (!(r_cor >= 0.0 && r_cor <= 1.0)) {
    throw InvalidInput("r_cor must lie in [0, 1]");
  }
  if (r_cor == 1.0) return kInfinity;
  return 1.0 / (1.0 - r_cor);
}

}  // namespace robq
