#include "robq/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "robq/error.hpp"

namespace robq {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::SingleBest:
      return "SingleBest";
    case Strategy::RSD:
      return "RS-D";
    case Strategy::RSI:
      return "RS-I";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "SingleBest" || name == "SB") return Strategy::SingleBest;
  if (name == "RS-D") return Strategy::RSD;
  if (name == "RS-I") return Strategy::RSI;
  throw InvalidInput("unknown strategy '" + name + "'");
}

double robustness_ratio(double r1, double r2) {
  if (!(r1 >= 0.0 && r1 <= 1.0) || !(r2 >= 0.0 && r2 <= 1.0)) {
    throw InvalidInput("robustness values must lie in [0, 1]");
  }
  if (r1 == 0.0) return r2 == 0.0 ? 1.0 : kInfinity;
  return r2 / r1;
}

namespace {

// Sorted view of the samples with prefix counts, so every candidate
// threshold is evaluated in O(1).
struct ThresholdScan {
  std::vector<double> sorted_ratio;
  std::vector<std::size_t> m1_prefix;  // M1 correct among sorted[0..i)
  std::vector<std::size_t> m2_prefix;
  // Candidate j routes sorted[start[j]..n) to M2.
  std::vector<double> threshold;
  std::vector<std::size_t> start;

  explicit ThresholdScan(std::span<const SelectionSample> samples) {
    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (const auto& s : samples) {
      if (std::isnan(s.ratio)) throw InvalidInput("robustness ratio is NaN");
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].ratio < samples[b].ratio; });
    sorted_ratio.resize(n);
    m1_prefix.assign(n + 1, 0);
    m2_prefix.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = samples[order[i]];
      sorted_ratio[i] = s.ratio;
      m1_prefix[i + 1] = m1_prefix[i] + (s.m1_correct ? 1 : 0);
      m2_prefix[i + 1] = m2_prefix[i] + (s.m2_correct ? 1 : 0);
    }

    threshold.push_back(-kInfinity);
    start.push_back(0);
    for (std::size_t i = 1; i < n; ++i) {
      const double a = sorted_ratio[i - 1];
      const double b = sorted_ratio[i];
      if (a == b) continue;
      threshold.push_back(between(a, b));
      start.push_back(i);
    }
    threshold.push_back(kInfinity);
    start.push_back(n);
  }

  // A threshold t with a <= t < b, so "ratio > t" separates them.
  static double between(double a, double b) {
    if (std::isinf(b)) return a + 1.0;
    const double mid = a + (b - a) / 2.0;
    return (mid > a && mid < b) ? mid : a;
  }

  std::size_t n() const { return sorted_ratio.size(); }
  std::size_t combined_correct(std::size_t j) const {
    const std::size_t s = start[j];
    return m1_prefix[s] + (m2_prefix[n()] - m2_prefix[s]);
  }
  // (M2 correct - M1 correct) on the tail, and the tail size.
  std::pair<std::int64_t, std::size_t> tail_advantage(std::size_t j) const {
    const std::size_t s = start[j];
    const auto c2 = static_cast<std::int64_t>(m2_prefix[n()] - m2_prefix[s]);
    const auto c1 = static_cast<std::int64_t>(m1_prefix[n()] - m1_prefix[s]);
    return {c2 - c1, n() - s};
  }

  ThresholdFit result(std::size_t j) const {
    ThresholdFit fit{};
    fit.threshold = threshold[j];
    fit.routed_to_m2 = n() - start[j];
    fit.combined_accuracy =
        n() == 0 ? 0.0 : static_cast<double>(combined_correct(j)) / static_cast<double>(n());
    const auto [diff, tail] = tail_advantage(j);
    fit.tail_gain = tail == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(tail);
    return fit;
  }
};

}  // namespace

ThresholdFit fit_threshold_rsd(std::span<const SelectionSample> samples) {
  const ThresholdScan scan(samples);
  std::size_t best = scan.threshold.size() - 1;
  for (std::size_t j = best; j-- > 0;) {
    if (scan.combined_correct(j) > scan.combined_correct(best)) best = j;
  }
  return scan.result(best);
}

ThresholdFit fit_threshold_rsi(std::span<const SelectionSample> samples) {
  const ThresholdScan scan(samples);
  const std::size_t never = scan.threshold.size() - 1;
  std::size_t best = never;
  std::int64_t best_diff = 0;
  std::size_t best_tail = 0;
  // gain a/b > c/d with positive tails compared exactly by cross-multiplying.
  for (std::size_t j = never; j-- > 0;) {
    const auto [diff, tail] = scan.tail_advantage(j);
    if (diff <= 0) continue;
    if (best == never) {
      best = j, best_diff = diff, best_tail = tail;
      continue;
    }
    const auto lhs = diff * static_cast<std::int64_t>(best_tail);
    const auto rhs = best_diff * static_cast<std::int64_t>(tail);
    if (lhs > rhs || (lhs == rhs && diff > best_diff)) {
      best = j, best_diff = diff, best_tail = tail;
    }
  }
  return scan.result(best);
}

std::vector<SelectionSample> selection_samples(const PredictionTable& m1, const PredictionTable& m2) {
  require_aligned(m1, m2);
  std::vector<SelectionSample> samples;
  samples.reserve(m1.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    const auto& truth = m1.rows()[i].true_label;
    if (m2.rows()[i].true_label != truth) {
      throw InvalidInput("prediction tables disagree on the label of '" +
                         m1.rows()[i].instance_id + "'");
    }
    const double r1 = robustness_cor(m1.rows()[i].dist);
    const double r2 = robustness_cor(m2.rows()[i].dist);
    samples.push_back({robustness_ratio(r1, r2), predicted_class(m1.rows()[i].dist) == truth,
                       predicted_class(m2.rows()[i].dist) == truth});
  }
  return samples;
}

SelectionPolicy fit_rsd(const PredictionTable& val_m1, const PredictionTable& val_m2) {
  const auto samples = selection_samples(val_m1, val_m2);
  return {Strategy::RSD, val_m1.model_id(), val_m2.model_id(), fit_threshold_rsd(samples).threshold};
}

SelectionPolicy fit_rsi(const PredictionTable& val_m1, const PredictionTable& val_m2) {
  const auto samples = selection_samples(val_m1, val_m2);
  return {Strategy::RSI, val_m1.model_id(), val_m2.model_id(), fit_threshold_rsi(samples).threshold};
}

SelectionPolicy single_best(const PredictionTable& val_m1, const PredictionTable& val_m2) {
  require_aligned(val_m1, val_m2);
  return {Strategy::SingleBest, val_m1.model_id(), val_m2.model_id(), kInfinity};
}

SelectionPolicy fit_policy(Strategy strategy, const PredictionTable& val_m1,
                           const PredictionTable& val_m2) {
  switch (strategy) {
    case Strategy::RSD:
      return fit_rsd(val_m1, val_m2);
    case Strategy::RSI:
      return fit_rsi(val_m1, val_m2);
    case Strategy::SingleBest:
      break;
  }
  return single_best(val_m1, val_m2);
}

std::vector<RoutedPrediction> apply_policy(const SelectionPolicy& policy,
                                           const PredictionTable& m1, const PredictionTable& m2) {
  require_aligned(m1, m2);
  std::vector<RoutedPrediction> routed;
  routed.reserve(m1.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    const auto& d1 = m1.rows()[i].dist;
    const auto& d2 = m2.rows()[i].dist;
    const double ratio = robustness_ratio(robustness_cor(d1), robustness_cor(d2));
    const bool use_m2 = policy.routes_to_m2(ratio);
    routed.push_back({m1.rows()[i].instance_id, use_m2 ? policy.m2_id : policy.m1_id,
                      predicted_class(use_m2 ? d2 : d1), ratio});
  }
  return routed;
}

double routed_accuracy(std::span<const RoutedPrediction> routed, const PredictionTable& truth) {
  if (routed.size() != truth.size()) throw InvalidInput("routed predictions and labels differ in length");
  if (routed.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < routed.size(); ++i) {
    if (routed[i].instance_id != truth.rows()[i].instance_id) {
      throw InvalidInput("routed predictions misaligned with labels");
    }
    correct += routed[i].predicted_class == truth.rows()[i].true_label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(routed.size());
}

namespace {

nlohmann::json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

double threshold_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    throw ValidationError("threshold string must be \"inf\" or \"-inf\"");
  }
  if (j.is_number()) return j.get<double>();
  throw ValidationError("threshold must be a number or \"inf\"");
}

}  // namespace

nlohmann::json policy_to_json(const SelectionPolicy& policy) {
  return {{"strategy", to_string(policy.strategy)},
          {"m1_id", policy.m1_id},
          {"m2_id", policy.m2_id},
          {"threshold", threshold_to_json(policy.threshold)},
          {"ratio_metric", "r_cor"}};
}

SelectionPolicy policy_from_json(const nlohmann::json& j) {
  try {
    SelectionPolicy p;
    p.strategy = parse_strategy(j.at("strategy").get<std::string>());
    p.m1_id = j.at("m1_id").get<std::string>();
    p.m2_id = j.at("m2_id").get<std::string>();
    p.threshold = threshold_from_json(j.at("threshold"));
    if (j.contains("ratio_metric") && j.at("ratio_metric") != "r_cor") {
      throw ValidationError("unsupported ratio_metric");
    }
    if (p.strategy == Strategy::SingleBest && p.threshold != kInfinity) {
      throw ValidationError("SingleBest policy must have threshold inf");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed policy: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ValidationError(std::string("malformed policy: ") + e.what());
  }
}

}  // namespace robq
