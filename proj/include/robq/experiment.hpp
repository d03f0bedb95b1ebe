#pragma once

// Multi-split experiment protocol:
//
//   for each split s (seed = base_seed + s):
//     permute and cut into train / validation / test
//     for each rho: corrupt train and/or validation labels
//       grid-search each classifier on train, fit it on train
//       rank classifiers by validation accuracy -> M1, M2
//       fit SingleBest / RS-D / RS-I on validation, score everything on test
//
// Test labels are never corrupted and never used for fitting or ranking.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "robq/arc.hpp"
#include "robq/data.hpp"
#include "robq/models.hpp"
#include "robq/selection.hpp"

namespace robq {

inline constexpr int kConfigFormatVersion = 1;

struct ClassifierEntry {
  std::string id;
  // One spec = fixed hyperparameters; several = grid searched on train.
  std::vector<ClassifierSpec> grid;
};

struct CorruptionTargets {
  bool train = true;
  bool validation = true;
  CorruptionOptions options;
};

enum class ArcOrdering { RobustnessCor, RobustnessStar, Random };

std::string to_string(ArcOrdering key);
ArcOrdering parse_arc_ordering(const std::string& name);

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  std::string dataset_name;  // defaults to the file stem
  std::string label_column;
  SchemaHints schema;

  SplitSpec proportions;  // seed field unused; per-split seeds derive from base_seed
  std::size_t split_count = 15;
  std::uint64_t base_seed = 0;
  std::size_t cv_folds = 5;

  std::vector<ClassifierEntry> classifiers;
  std::vector<Strategy> strategies{Strategy::SingleBest, Strategy::RSD, Strategy::RSI};
  std::vector<double> rhos{0.0};
  CorruptionTargets corruption;

  std::vector<ArcOrdering> arc_keys{ArcOrdering::RobustnessCor, ArcOrdering::Random};
  std::size_t arc_grid_size = kDefaultArcGridSize;

  std::filesystem::path output_dir;

  // Throws InvalidInput on an inconsistent configuration.
  void validate() const;
};

// Relative paths in the file resolve against `base_dir`. Throws
// ValidationError on unknown keys, a wrong format_version, or bad values.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ResultRow {
  std::string dataset;
  double rho;
  std::string method;  // classifier id, or SingleBest / RS-D / RS-I
  std::vector<double> split_accuracy;
  double mean_accuracy;
  bool beats_single_best;  // strict, on mean accuracy; always false for SingleBest
};

struct SplitRecord {
  std::size_t split;
  double rho;
  std::string m1_id;
  std::string m2_id;
  std::map<std::string, double> validation_accuracy;  // per classifier and strategy
  std::map<std::string, double> test_accuracy;
  std::vector<SelectionPolicy> policies;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<SplitRecord> splits;
};

// Thrown with the split index and stage when a module fails mid-run.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::size_t split, const std::string& stage, const std::string& what)
      : std::runtime_error("split " + std::to_string(split) + ", " + stage + ": " + what) {}
};

// Runs the protocol. When config.output_dir is non-empty, writes
// results.csv, splits.csv and per-split artifacts there.
ResultTable run_experiment(const ExperimentConfig& config);

// `dataset,rho,method,mean_accuracy,wins_vs_sb`, full precision.
void write_result_csv(std::ostream& out, const ResultTable& table);
// `dataset,rho,method,split,accuracy`.
void write_split_csv(std::ostream& out, const ResultTable& table);
// Human summary with 5 decimals.
std::string format_summary(const ResultTable& table);

struct ArcComparison {
  std::string classifier_id;
  ArcOrdering key;
  std::vector<ARCurve> per_split;  // test-set ARCs
  ARCurve average;
};

// Per split, fits every classifier on (uncorrupted) train and builds a test
// ARC for each ordering key; curves are averaged across splits. Writes CSV
// and SVG files to config.output_dir when set.
std::vector<ArcComparison> arc_compare(const ExperimentConfig& config, const std::vector<ArcOrdering>& keys);

// Outcomes of `table` ordered by `key`; `seed` drives the random key.
std::vector<ScoredOutcome> scored_outcomes(const PredictionTable& table, ArcOrdering key, std::uint64_t seed);

}  // namespace robq
