#pragma once

// Closed-form robustness of a single prediction under constant-odds-ratio
// perturbations of the model's probability measure.
//
// For a conditional distribution p(.|x) with most likely class y1 and
// runner-up y2:
//
//   r_star = p(y1|x) / p(y2|x)              in [1, +inf]
//   r_cor  = (p(y1|x) - p(y2|x)) / p(y1|x)  in [0, 1]
//
// r_cor = 1 - 1/r_star, so both induce the same ordering of instances.
// r_star is +inf exactly when the runner-up has zero probability.

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace robq {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Tolerance on |sum(p) - 1| accepted by ClassDistribution.
inline constexpr double kDistributionSumTolerance = 1e-6;

using ClassIndex = std::size_t;

// Validated p(.|x). Out-of-tolerance input is rejected, never renormalized.
class ClassDistribution {
 public:
  // Throws InvalidInput if K < 2, an entry is outside [0,1] or non-finite, or
  // the entries do not sum to 1 within kDistributionSumTolerance.
  explicit ClassDistribution(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t class_count() const noexcept { return probs_.size(); }
  double operator[](ClassIndex y) const { return probs_[y]; }

  bool operator==(const ClassDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

struct RobustnessScore {
  double r_cor;
  double r_star;  // +inf when the runner-up has zero probability
  ClassIndex top;
  ClassIndex runner_up;
};

// (y1, y2) by descending probability; ties go to the lowest class index.
// Works on any non-negative vector (conditional or joint column).
// Throws InvalidInput when fewer than two entries are given.
std::pair<ClassIndex, ClassIndex> top_two(std::span<const double> values);
std::pair<ClassIndex, ClassIndex> top_two(const ClassDistribution& dist);

ClassIndex predicted_class(const ClassDistribution& dist);

RobustnessScore robustness(const ClassDistribution& dist);
double robustness_cor(const ClassDistribution& dist);
double robustness_star(const ClassDistribution& dist);

// Same metrics evaluated on unnormalized joint masses p(y, x) for a fixed x.
// Equal to the conditional form by Bayes' rule. Throws InvalidInput on
// negative or non-finite entries, or an all-zero column.
RobustnessScore robustness_from_joint(std::span<const double> joint_column);

// r_star -> r_cor. Throws InvalidInput for r_star < 1 or NaN.
double star_to_cor(double r_star);
// r_cor -> r_star; 1 maps to +inf. Throws InvalidInput outside [0, 1].
double cor_to_star(double r_cor);

}  // namespace robq
