#pragma once

// Brute-force checks of the closed-form COR robustness on finite spaces.
//
// A FiniteJointModel is an explicit joint pmf p(y, x) over K classes and M
// feature values. The dissimilarity between two such measures is
//
//   d*(P, Q) = max L / min L,   L = q / p on the support of P,
//
// and the robustness of the prediction at column x is the smallest d*(P, Q)
// over measures Q whose conditional at x no longer ranks the original top
// class strictly first. The closed form says this equals
// p(y1, x) / p(y2, x). build_witness constructs a Q attaining it and
// min_flipping_dissimilarity searches for anything that beats it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robq/metrics.hpp"
#include "robq/random.hpp"

namespace robq::oracle {

inline constexpr double kJointSumTolerance = 1e-9;
inline constexpr std::size_t kDefaultSearchBudget = 10'000;

class FiniteJointModel {
 public:
  // Row-major K x M masses, mass[y * M + x]. Throws InvalidInput on negative
  // or non-finite entries, a sum off by more than kJointSumTolerance, or an
  // all-zero column.
  FiniteJointModel(std::size_t class_count, std::size_t feature_count, std::vector<double> mass);

  std::size_t class_count() const noexcept { return classes_; }
  std::size_t feature_count() const noexcept { return features_; }
  std::span<const double> mass() const noexcept { return mass_; }

  double operator()(ClassIndex y, std::size_t x) const { return mass_[y * features_ + x]; }

  // p(., x) as unnormalized joint masses.
  std::vector<double> column(std::size_t x) const;
  // p(. | x).
  ClassDistribution conditional(std::size_t x) const;

 private:
  std::size_t classes_;
  std::size_t features_;
  std::vector<double> mass_;
};

struct WitnessConstruction {
  double pi1;  // P(Y = y1), marginal over all feature values
  double pi2;  // P(Y = y2)
  double lambda_minus;
  double lambda_plus;
  double ratio;  // p(y1, x) / p(y2, x)
  ClassIndex top;
  ClassIndex runner_up;

  // E_P[L] for the likelihood ratio L = lambda_minus on y1, lambda_plus on
  // y2, 1 elsewhere. Equals 1 up to rounding.
  double expected_likelihood_ratio() const;
};

struct Witness {
  WitnessConstruction construction;
  FiniteJointModel perturbed;
};

// Throws InvalidInput when shapes differ. Returns +inf when Q is not
// absolutely continuous w.r.t. P or L vanishes somewhere on P's support.
double dstar_finite(const FiniteJointModel& p, const FiniteJointModel& q);

// Throws NoWitness when p(y2, x) = 0, InvalidInput when x is out of range.
Witness build_witness(const FiniteJointModel& p, std::size_t x);

// True when the conditional of q at x does not rank `top` strictly first.
// A relative slack of 1e-12 absorbs rounding at the exact tie produced by
// the witness.
bool prediction_flipped(const FiniteJointModel& q, std::size_t x, ClassIndex top);

struct FlipSearchResult {
  double dissimilarity;  // smallest d*(P, Q) over flipping candidates found
  std::size_t candidates_evaluated;
  std::size_t flipping_candidates;
};

// Randomized search with coordinate-descent refinement. Returns nullopt when
// no absolutely continuous Q can flip the prediction (the only class with
// positive mass at x is the top one). The result is an upper bound on the
// true minimum. Throws InvalidInput for budget 0 or x out of range.
std::optional<FlipSearchResult> min_flipping_dissimilarity(const FiniteJointModel& p, std::size_t x,
                                                           std::size_t search_budget,
                                                           std::uint64_t seed);

// Random model with masses drawn uniformly then normalized; every cell is
// strictly positive.
FiniteJointModel random_joint_model(std::size_t class_count, std::size_t feature_count, Rng& rng);

struct ColumnCheck {
  std::size_t trial;
  std::size_t column;
  double r_star;
  double witness_dissimilarity;
  double witness_tie_gap;  // |q(y1|x) - q(y2|x)|
  double expected_likelihood_ratio;
  std::optional<double> searched_minimum;
  bool passed;
};

struct VerificationReport {
  std::vector<ColumnCheck> checks;
  std::size_t failures = 0;
  bool passed() const noexcept { return failures == 0; }
};

struct VerificationOptions {
  std::uint64_t seed = 7;
  std::size_t trials = 50;
  std::size_t class_count = 3;
  std::size_t feature_count = 4;
  std::size_t search_budget = kDefaultSearchBudget;
  double tolerance = 1e-9;
};

// Runs the witness and search checks on every column of `trials` random
// models.
VerificationReport verify_closed_form(const VerificationOptions& options);

std::string format_report(const VerificationReport& report, const VerificationOptions& options);

}  // namespace robq::oracle
