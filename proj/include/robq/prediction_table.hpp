#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "robq/metrics.hpp"

namespace robq {

struct PredictionRow {
  std::string instance_id;
  ClassIndex true_label;
  ClassDistribution dist;
};

// Per-instance predictions of one model on one data slice.
class PredictionTable {
 public:
  // Throws InvalidInput on duplicate ids, labels >= class_count, or
  // distributions with the wrong number of classes.
  PredictionTable(std::string model_id, std::size_t class_count, std::vector<PredictionRow> rows);

  const std::string& model_id() const noexcept { return model_id_; }
  std::size_t class_count() const noexcept { return class_count_; }
  const std::vector<PredictionRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  bool correct(std::size_t i) const { return predicted_class(rows_[i].dist) == rows_[i].true_label; }
  std::size_t correct_count() const;
  // 0 for an empty table.
  double accuracy() const;

 private:
  std::string model_id_;
  std::size_t class_count_;
  std::vector<PredictionRow> rows_;
};

// Throws InvalidInput unless both tables list the same instance ids in the
// same order.
void require_aligned(const PredictionTable& a, const PredictionTable& b);

// Prediction CSV: header `instance_id,true_label,p_0,...,p_{K-1}`.
// Throws ValidationError (with the offending line) on malformed content,
// probability rows whose sum is off by more than 1e-6, or duplicate ids.
PredictionTable read_predictions(std::istream& in, const std::string& model_id);
// model_id defaults to the file stem.
PredictionTable ingest_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const PredictionTable& table);

}  // namespace robq
