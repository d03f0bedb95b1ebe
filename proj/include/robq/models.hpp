#pragma once

// Built-in probabilistic classifiers: Gaussian naive Bayes, k-nearest
// neighbours and a CART random forest. All of them emit validated
// ClassDistributions, and fitting is a pure function of (spec, data, seed).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "robq/data.hpp"
#include "robq/metrics.hpp"
#include "robq/prediction_table.hpp"

namespace robq {

struct GaussianNbParams {
  double variance_floor = 1e-9;  // added to every per-class feature variance
};

struct KnnParams {
  std::size_t k = 5;
  double laplace_alpha = 1.0;  // (votes + alpha) / (k + K alpha)
};

struct ForestParams {
  std::size_t tree_count = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d)), at least 1
  bool bootstrap = true;
  double laplace_alpha = 1.0;  // leaf (count + alpha) / (n + K alpha)
};

using ClassifierParams = std::variant<GaussianNbParams, KnnParams, ForestParams>;

struct ClassifierSpec {
  std::string id;  // display name; defaults to the kind
  ClassifierParams params;
  std::uint64_t seed = 0;
  // Input columns the learner sees; empty = all.
  std::vector<std::size_t> feature_columns;

  std::string kind() const;
  // Throws InvalidInput on out-of-range hyperparameters.
  void validate() const;
};

// {"kind": "gaussian_nb"|"knn"|"random_forest", "id", "seed", <params>}.
nlohmann::json spec_to_json(const ClassifierSpec& spec);
// Throws ValidationError on unknown kinds or keys.
ClassifierSpec spec_from_json(const nlohmann::json& j);

class FittedModel {
 public:
  class Impl;

  const std::string& id() const noexcept;
  std::size_t class_count() const noexcept;
  // Width of the input rows (before any column subset).
  std::size_t feature_count() const noexcept;

  // Throws InvalidInput on a dimension mismatch.
  ClassDistribution predict_one(std::span<const double> features) const;

  nlohmann::json to_json() const;
  // Throws ValidationError on a missing or unsupported format_version.
  static FittedModel from_json(const nlohmann::json& j);

  explicit FittedModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

inline constexpr int kModelFormatVersion = 1;

// Labels must be < class_count and at least two classes must be present.
// Throws InvalidInput otherwise, or on non-finite features.
FittedModel fit(const ClassifierSpec& spec, const Matrix& features, std::span<const ClassIndex> labels,
                std::size_t class_count);

std::vector<ClassDistribution> predict_distributions(const FittedModel& model, const Matrix& features);

// Rows keyed by `ids`, with `labels` as true labels.
PredictionTable predict_proba(const FittedModel& model, const Matrix& features,
                              std::span<const std::string> ids, std::span<const ClassIndex> labels);
PredictionTable predict_proba(const FittedModel& model, const Dataset& data);

// Stratified fold ids: every class present is dealt round-robin over the
// folds after a seeded shuffle. Throws StratificationError when a class has
// fewer members than folds.
std::vector<std::size_t> stratified_folds(std::span<const ClassIndex> labels, std::size_t folds,
                                          std::uint64_t seed);

struct GridSearchResult {
  std::size_t best_index;
  ClassifierSpec best;
  std::vector<double> mean_accuracy;  // per spec, mean over folds
};

// Highest mean fold accuracy wins; ties go to the earliest spec.
GridSearchResult grid_search_cv(std::span<const ClassifierSpec> specs, const Matrix& features,
                                std::span<const ClassIndex> labels, std::size_t class_count,
                                std::size_t folds, std::uint64_t seed);

}  // namespace robq
