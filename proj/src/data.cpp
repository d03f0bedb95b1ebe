#include "robq/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "robq/csv.hpp"
#include "robq/error.hpp"
#include "robq/random.hpp"

namespace robq {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw InvalidInput("matrix data does not match its shape");
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.features = features.select_rows(indices);
  out.class_count = class_count;
  out.class_names = class_names;
  out.feature_meta = feature_meta;
  out.labels.reserve(indices.size());
  out.row_ids.reserve(indices.size());
  for (std::size_t i : indices) {
    out.labels.push_back(labels[i]);
    out.row_ids.push_back(row_ids[i]);
  }
  return out;
}

std::vector<std::string> Dataset::instance_ids() const {
  std::vector<std::string> ids;
  ids.reserve(row_ids.size());
  for (std::size_t r : row_ids) ids.push_back(std::to_string(r));
  return ids;
}

namespace {

bool is_missing(const std::string& cell) {
  std::string_view s = cell;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s.empty() || s == "?" || s == "NA" || s == "NaN" || s == "nan";
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const std::string& name, const std::string& label_column,
                         const SchemaHints& hints) {
  csv::LineReader reader(in);
  const auto header = reader.next();
  if (!header) throw ValidationError("dataset file is empty");

  std::size_t label_idx = header->size();
  for (std::size_t c = 0; c < header->size(); ++c) {
    if ((*header)[c] == label_column) label_idx = c;
  }
  if (label_idx == header->size()) {
    throw ValidationError("label column '" + label_column + "' not found", reader.line_number());
  }
  for (const auto& col : hints.categorical_columns) {
    if (std::find(header->begin(), header->end(), col) == header->end()) {
      throw ValidationError("categorical column '" + col + "' not found", reader.line_number());
    }
  }

  Dataset ds;
  ds.name = name;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header->size(); ++c) {
    if (c == label_idx || hints.ignored_columns.contains((*header)[c])) continue;
    feature_cols.push_back(c);
    ColumnMeta meta;
    meta.name = (*header)[c];
    meta.kind = hints.categorical_columns.contains(meta.name) ? ColumnKind::Categorical
                                                              : ColumnKind::Continuous;
    ds.feature_meta.push_back(std::move(meta));
  }
  if (feature_cols.empty()) throw ValidationError("dataset has no feature columns");

  // Raw cells first: categorical dictionaries need the whole file.
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> lines;
  std::unordered_map<std::string, ClassIndex> label_index;
  while (auto record = reader.next()) {
    const std::size_t line = reader.line_number();
    if (record->size() != header->size()) {
      throw ValidationError("expected " + std::to_string(header->size()) + " fields, got " +
                                std::to_string(record->size()),
                            line);
    }
    for (std::size_t c = 0; c < record->size(); ++c) {
      if ((c == label_idx || !hints.ignored_columns.contains((*header)[c])) && is_missing((*record)[c])) {
        throw ValidationError("missing value in column '" + (*header)[c] + "'", line);
      }
    }
    const std::string& label = (*record)[label_idx];
    auto [it, inserted] = label_index.try_emplace(label, ds.class_names.size());
    if (inserted) ds.class_names.push_back(label);
    ds.labels.push_back(it->second);
    ds.row_ids.push_back(cells.size());
    cells.push_back(std::move(*record));
    lines.push_back(line);
  }
  if (cells.empty()) throw ValidationError("dataset has no rows");
  ds.class_count = ds.class_names.size();
  if (ds.class_count < 2) throw ValidationError("label column '" + label_column + "' has a single class");

  std::vector<std::unordered_map<std::string, std::size_t>> dictionaries(feature_cols.size());
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    if (ds.feature_meta[f].kind != ColumnKind::Categorical) continue;
    for (const auto& row : cells) {
      const auto& v = row[feature_cols[f]];
      if (dictionaries[f].try_emplace(v, ds.feature_meta[f].categories.size()).second) {
        ds.feature_meta[f].categories.push_back(v);
      }
    }
  }
  std::size_t width = 0;
  for (const auto& meta : ds.feature_meta) {
    width += meta.kind == ColumnKind::Categorical ? meta.categories.size() : 1;
  }

  ds.features = Matrix(cells.size(), width);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::size_t out = 0;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto& cell = cells[i][feature_cols[f]];
      if (ds.feature_meta[f].kind == ColumnKind::Categorical) {
        ds.features(i, out + dictionaries[f].at(cell)) = 1.0;
        out += ds.feature_meta[f].categories.size();
        continue;
      }
      const auto v = csv::parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError("unparseable number '" + cell + "' in column '" +
                                  ds.feature_meta[f].name + "'",
                              lines[i]);
      }
      ds.features(i, out++) = *v;
    }
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const SchemaHints& hints) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_dataset_csv(in, path.stem().string(), label_column, hints);
}

namespace {

void check_proportions(const SplitSpec& spec) {
  if (!(spec.train > 0.0 && spec.validation > 0.0 && spec.test > 0.0)) {
    throw InvalidInput("split proportions must all be > 0");
  }
  if (std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9) {
    throw InvalidInput("split proportions must sum to 1");
  }
}

void cut(std::span<const std::size_t> perm, const SplitSpec& spec, SplitIndices& out) {
  const std::size_t n = perm.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train + 1e-9));
  const auto n_val =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.validation + 1e-9));
  const std::size_t n_val_end = std::min(n, n_train + n_val);
  out.train.insert(out.train.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)));
  out.validation.insert(out.validation.end(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)),
                        perm.begin() + static_cast<std::ptrdiff_t>(n_val_end));
  out.test.insert(out.test.end(), perm.begin() + static_cast<std::ptrdiff_t>(n_val_end), perm.end());
}

void require_non_empty(const SplitIndices& s) {
  if (s.train.empty() || s.validation.empty() || s.test.empty()) {
    throw InvalidInput("split produces an empty part (train " + std::to_string(s.train.size()) +
                       ", validation " + std::to_string(s.validation.size()) + ", test " +
                       std::to_string(s.test.size()) + ")");
  }
}

}  // namespace

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  check_proportions(spec);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  shuffle(std::span<std::size_t>(perm), rng);
  SplitIndices out;
  cut(perm, spec, out);
  require_non_empty(out);
  return out;
}

SplitIndices stratified_split_indices(std::span<const ClassIndex> labels, const SplitSpec& spec) {
  check_proportions(spec);
  std::map<ClassIndex, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(spec.seed);
  SplitIndices out;
  for (auto& [label, members] : by_class) {
    shuffle(std::span<std::size_t>(members), rng);
    cut(members, spec, out);
  }
  require_non_empty(out);
  return out;
}

DatasetSplit split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.train), ds.subset(idx.validation), ds.subset(idx.test)};
}

nlohmann::json split_manifest(const SplitSpec& spec, const SplitIndices& indices) {
  return {{"seed", spec.seed},
          {"proportions", {spec.train, spec.validation, spec.test}},
          {"train", indices.train},
          {"validation", indices.validation},
          {"test", indices.test}};
}

CorruptionResult corrupt_labels(std::span<const ClassIndex> labels, double rho, std::size_t class_count,
                                std::uint64_t seed, const CorruptionOptions& options) {
  if (class_count < 2) throw InvalidInput("label corruption needs K >= 2");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in [0, 1]");
  for (ClassIndex y : labels) {
    if (y >= class_count) throw InvalidInput("label exceeds class count");
  }

  Rng rng(seed);
  CorruptionResult result;
  result.labels.assign(labels.begin(), labels.end());
  if (options.exact_count) {
    std::vector<std::size_t> perm(labels.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), rng);
    const auto count =
        static_cast<std::size_t>(std::floor(rho * static_cast<double>(labels.size()) + 1e-9));
    result.selected.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(result.selected.begin(), result.selected.end());
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (bernoulli(rng, rho)) result.selected.push_back(i);
    }
  }

  for (std::size_t i : result.selected) {
    ClassIndex y;
    if (options.allow_unchanged) {
      y = uniform_index(rng, class_count);
    } else {
      // Uniform over the K-1 other classes.
      y = uniform_index(rng, class_count - 1);
      if (y >= labels[i]) ++y;
    }
    result.labels[i] = y;
    result.changed += y != labels[i] ? 1 : 0;
  }
  return result;
}

}  // namespace robq
