#pragma once

// Robustness-based dynamic selection between the best model M1 and the
// runner-up M2. For each instance, ratio = r2 / r1 with r_i the r_cor
// robustness of model i's prediction; M2 answers iff ratio > t.
//
// RS-D picks t maximizing combined validation accuracy. RS-I picks t where
// M2's accuracy advantage over M1, measured on the instances with ratio > t,
// is largest, and falls back to t = +inf when no threshold gives a positive
// advantage.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "robq/metrics.hpp"
#include "robq/prediction_table.hpp"

namespace robq {

enum class Strategy { SingleBest, RSD, RSI };

std::string to_string(Strategy s);
// Accepts "SingleBest"/"SB", "RS-D", "RS-I". Throws InvalidInput otherwise.
Strategy parse_strategy(const std::string& name);

struct SelectionPolicy {
  Strategy strategy = Strategy::SingleBest;
  std::string m1_id;
  std::string m2_id;
  // +inf: always M1. -inf: always M2. Otherwise a midpoint between adjacent
  // observed validation ratios.
  double threshold = kInfinity;

  bool routes_to_m2(double ratio) const { return ratio > threshold; }
};

struct RoutedPrediction {
  std::string instance_id;
  std::string chosen_model;
  ClassIndex predicted_class;
  double ratio;
};

// r2 / r1 with 0/0 -> 1 and x/0 -> +inf. Throws InvalidInput outside [0, 1].
double robustness_ratio(double r1, double r2);

// Per-instance inputs of a threshold fit.
struct SelectionSample {
  double ratio;
  bool m1_correct;
  bool m2_correct;
};

struct ThresholdFit {
  double threshold;
  // Validation accuracy of the combined rule (RS-D objective).
  double combined_accuracy;
  // M2 minus M1 accuracy on the routed tail (RS-I objective); 0 when the
  // tail is empty.
  double tail_gain;
  std::size_t routed_to_m2;
};

// Candidate thresholds: -inf, the midpoints between adjacent distinct
// ratios, +inf. Ties in the objective resolve to the largest threshold; RS-I
// first prefers the larger absolute count advantage among equal gains.
ThresholdFit fit_threshold_rsd(std::span<const SelectionSample> samples);
ThresholdFit fit_threshold_rsi(std::span<const SelectionSample> samples);

// Builds samples from aligned validation tables (labels come from val_m1).
std::vector<SelectionSample> selection_samples(const PredictionTable& m1, const PredictionTable& m2);

// Tables must be aligned; the caller ranks M1 (higher validation accuracy)
// ahead of M2.
SelectionPolicy fit_rsd(const PredictionTable& val_m1, const PredictionTable& val_m2);
SelectionPolicy fit_rsi(const PredictionTable& val_m1, const PredictionTable& val_m2);
SelectionPolicy single_best(const PredictionTable& val_m1, const PredictionTable& val_m2);
SelectionPolicy fit_policy(Strategy strategy, const PredictionTable& val_m1,
                           const PredictionTable& val_m2);

std::vector<RoutedPrediction> apply_policy(const SelectionPolicy& policy,
                                           const PredictionTable& m1, const PredictionTable& m2);

// Fraction of routed predictions matching the labels in `truth`.
double routed_accuracy(std::span<const RoutedPrediction> routed, const PredictionTable& truth);

// {"strategy", "m1_id", "m2_id", "threshold", "ratio_metric"}; infinite
// thresholds are the strings "inf" / "-inf".
nlohmann::json policy_to_json(const SelectionPolicy& policy);
// Throws ValidationError on missing keys or bad values.
SelectionPolicy policy_from_json(const nlohmann::json& j);

}  // namespace robq
