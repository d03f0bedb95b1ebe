#include "robq/prediction_table.hpp"

#include <fstream>
#include <ostream>
#include <unordered_set>

#include "robq/csv.hpp"
#include "robq/error.hpp"
#include "robq/format.hpp"

namespace robq {

PredictionTable::PredictionTable(std::string model_id, std::size_t class_count,
                                 std::vector<PredictionRow> rows)
    : model_id_(std::move(model_id)), class_count_(class_count), rows_(std::move(rows)) {
  if (class_count_ < 2) throw InvalidInput("prediction table needs at least 2 classes");
  std::unordered_set<std::string> seen;
  for (const auto& row : rows_) {
    if (!seen.insert(row.instance_id).second) {
      throw InvalidInput("duplicate instance_id '" + row.instance_id + "'");
    }
    if (row.true_label >= class_count_) {
      throw InvalidInput("label " + std::to_string(row.true_label) + " of '" + row.instance_id +
                         "' exceeds class count");
    }
    if (row.dist.class_count() != class_count_) {
      throw InvalidInput("distribution of '" + row.instance_id + "' has wrong class count");
    }
  }
}

std::size_t PredictionTable::correct_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) c += correct(i) ? 1 : 0;
  return c;
}

double PredictionTable::accuracy() const {
  if (rows_.empty()) return 0.0;
  return static_cast<double>(correct_count()) / static_cast<double>(rows_.size());
}

void require_aligned(const PredictionTable& a, const PredictionTable& b) {
  if (a.size() != b.size()) {
    throw InvalidInput("prediction tables '" + a.model_id() + "' and '" + b.model_id() +
                       "' have different lengths");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.rows()[i].instance_id != b.rows()[i].instance_id) {
      throw InvalidInput("prediction tables misaligned at row " + std::to_string(i) + ": '" +
                         a.rows()[i].instance_id + "' vs '" + b.rows()[i].instance_id + "'");
    }
  }
}

PredictionTable read_predictions(std::istream& in, const std::string& model_id) {
  csv::LineReader reader(in);
  const auto header = reader.next();
  if (!header) throw ValidationError("prediction file is empty");
  const std::size_t header_line = reader.line_number();
  if (header->size() < 4 || (*header)[0] != "instance_id" || (*header)[1] != "true_label") {
    throw ValidationError("expected header instance_id,true_label,p_0,p_1,...", header_line);
  }
  const std::size_t k = header->size() - 2;
  for (std::size_t y = 0; y < k; ++y) {
    if ((*header)[y + 2] != "p_" + std::to_string(y)) {
      throw ValidationError("expected column p_" + std::to_string(y), header_line);
    }
  }

  std::vector<PredictionRow> rows;
  std::unordered_set<std::string> seen;
  while (auto record = reader.next()) {
    const std::size_t line = reader.line_number();
    if (record->size() != k + 2) {
      throw ValidationError("expected " + std::to_string(k + 2) + " fields, got " +
                                std::to_string(record->size()),
                            line);
    }
    const std::string& id = (*record)[0];
    if (id.empty()) throw ValidationError("empty instance_id", line);
    if (!seen.insert(id).second) throw ValidationError("duplicate instance_id '" + id + "'", line);
    const auto label = csv::parse_integer((*record)[1]);
    if (!label || *label < 0 || static_cast<std::size_t>(*label) >= k) {
      throw ValidationError("true_label must be an integer in [0, " + std::to_string(k) + ")",
                            line);
    }
    std::vector<double> probs(k);
    for (std::size_t y = 0; y < k; ++y) {
      const auto v = csv::parse_double((*record)[y + 2]);
      if (!v) throw ValidationError("unparseable probability in column p_" + std::to_string(y), line);
      probs[y] = *v;
    }
    try {
      rows.push_back({id, static_cast<ClassIndex>(*label), ClassDistribution(std::move(probs))});
    } catch (const InvalidInput& e) {
      throw ValidationError(std::string("invalid distribution: ") + e.what(), line);
    }
  }
  return PredictionTable(model_id, k, std::move(rows));
}

PredictionTable ingest_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_predictions(in, path.stem().string());
}

void write_predictions(std::ostream& out, const PredictionTable& table) {
  out << "instance_id,true_label";
  for (std::size_t y = 0; y < table.class_count(); ++y) out << ",p_" << y;
  out << '\n';
  for (const auto& row : table.rows()) {
    out << csv::escape(row.instance_id) << ',' << row.true_label;
    for (double p : row.dist.probs()) out << ',' << format_double(p);
    out << '\n';
  }
}

}  // namespace robq
