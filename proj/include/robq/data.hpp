#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "robq/metrics.hpp"

namespace robq {

// Dense row-major matrix of features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ColumnKind { Continuous, Categorical };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<std::string> categories;  // first-appearance order; categorical only
};

struct Dataset {
  std::string name;
  Matrix features;  // n x d after one-hot encoding
  std::vector<ClassIndex> labels;
  std::size_t class_count = 0;
  std::vector<std::string> class_names;
  std::vector<ColumnMeta> feature_meta;  // original (pre-encoding) columns
  // Row indices into the originally loaded file; instance ids downstream.
  std::vector<std::size_t> row_ids;

  std::size_t size() const noexcept { return labels.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::string> instance_ids() const;
};

struct SchemaHints {
  std::set<std::string> categorical_columns;
  // Header names to drop (e.g. an id column).
  std::set<std::string> ignored_columns;
};

// Loads a CSV with a header row. Categorical columns are one-hot encoded
// with categories in first-appearance order; labels map to contiguous
// indices in first-appearance order. Empty, "?", "NA" and "NaN" cells count
// as missing and are rejected. Throws ValidationError with line and column.
Dataset read_dataset_csv(std::istream& in, const std::string& name, const std::string& label_column,
                         const SchemaHints& hints = {});
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const SchemaHints& hints = {});

struct SplitSpec {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Uniform permutation from spec.seed, then contiguous cut: floor(n*train)
// and floor(n*validation) rows, the remainder to test. Throws InvalidInput
// for invalid proportions or an empty part.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

// Same permutation, but each class is permuted and cut separately.
SplitIndices stratified_split_indices(std::span<const ClassIndex> labels, const SplitSpec& spec);

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};
DatasetSplit split(const Dataset& ds, const SplitSpec& spec);

// {"seed", "proportions": [train, validation, test], "train": [...], ...}
nlohmann::json split_manifest(const SplitSpec& spec, const SplitIndices& indices);

struct CorruptionOptions {
  // Exactly floor(rho * n) instances, chosen uniformly, instead of
  // independent Bernoulli(rho) selection.
  bool exact_count = false;
  // Redraw uniformly from all K classes (label may stay the same) instead of
  // the K-1 other classes.
  bool allow_unchanged = false;
};

struct CorruptionResult {
  std::vector<ClassIndex> labels;
  std::vector<std::size_t> selected;  // ascending
  std::size_t changed = 0;
};

// Throws InvalidInput for rho outside [0,1], K < 2 or labels >= K.
CorruptionResult corrupt_labels(std::span<const ClassIndex> labels, double rho, std::size_t class_count,
                                std::uint64_t seed, const CorruptionOptions& options = {});

}  // namespace robq
