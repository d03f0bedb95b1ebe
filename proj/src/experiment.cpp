#include "robq/experiment.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "robq/csv.hpp"
#include "robq/error.hpp"
#include "robq/format.hpp"
#include "robq/random.hpp"

namespace robq {

using json = nlohmann::json;

std::string to_string(ArcOrdering key) {
  switch (key) {
    case ArcOrdering::RobustnessCor:
      return "robustness_cor";
    case ArcOrdering::RobustnessStar:
      return "robustness_star";
    case ArcOrdering::Random:
      return "random";
  }
  return "?";
}

ArcOrdering parse_arc_ordering(const std::string& name) {
  if (name == "robustness_cor") return ArcOrdering::RobustnessCor;
  if (name == "robustness_star") return ArcOrdering::RobustnessStar;
  if (name == "random") return ArcOrdering::Random;
  throw InvalidInput("unknown ARC ordering '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (label_column.empty()) throw InvalidInput("config: dataset.label_column is required");
  if (split_count < 1) throw InvalidInput("config: split count must be >= 1");
  if (cv_folds < 2) throw InvalidInput("config: cv_folds must be >= 2");
  if (classifiers.empty()) throw InvalidInput("config: at least one classifier is required");
  for (const auto& c : classifiers) {
    if (c.id.empty()) throw InvalidInput("config: classifier without id");
    if (c.grid.empty()) throw InvalidInput("config: classifier '" + c.id + "' has an empty grid");
    for (const auto& s : c.grid) s.validate();
  }
  for (std::size_t i = 0; i < classifiers.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (classifiers[i].id == classifiers[j].id) throw InvalidInput("config: duplicate classifier id '" + classifiers[i].id + "'");
    }
  }
  const bool needs_pair = std::any_of(strategies.begin(), strategies.end(),
                                      [](Strategy s) { return s != Strategy::SingleBest; });
  if (needs_pair && classifiers.size() < 2) {
    throw InvalidInput("config: RS-D / RS-I need at least two classifiers");
  }
  for (double rho : rhos) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("config: rho values must lie in [0, 1]");
  }
  if (rhos.empty()) throw InvalidInput("config: rho list is empty");
  if (arc_grid_size < 2) throw InvalidInput("config: arc grid_size must be >= 2");
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError("unknown key '" + key + "' in " + where);
    }
  }
}

std::set<std::string> string_set(const json& j) {
  const auto v = j.get<std::vector<std::string>>();
  return {v.begin(), v.end()};
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    reject_unknown(j, {"format_version", "dataset", "split", "seed", "cv_folds", "classifiers", "strategies",
                       "rho", "corruption", "arc", "output_dir"},
                   "config");
    if (j.value("format_version", 0) != kConfigFormatVersion) {
      throw ValidationError("config format_version must be " + std::to_string(kConfigFormatVersion));
    }
    ExperimentConfig c;

    const auto& d = j.at("dataset");
    reject_unknown(d, {"path", "label_column", "name", "categorical", "ignore"}, "dataset");
    std::filesystem::path path = d.at("path").get<std::string>();
    c.dataset_path = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    c.label_column = d.at("label_column").get<std::string>();
    c.dataset_name = d.value("name", "");
    if (d.contains("categorical")) c.schema.categorical_columns = string_set(d.at("categorical"));
    if (d.contains("ignore")) c.schema.ignored_columns = string_set(d.at("ignore"));

    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"proportions", "count"}, "split");
      if (s.contains("proportions")) {
        const auto p = s.at("proportions").get<std::vector<double>>();
        if (p.size() != 3) throw ValidationError("split.proportions needs 3 values");
        c.proportions = {p[0], p[1], p[2], 0};
      }
      c.split_count = s.value("count", c.split_count);
    }
    c.base_seed = j.value("seed", c.base_seed);
    c.cv_folds = j.value("cv_folds", c.cv_folds);

    for (const auto& e : j.at("classifiers")) {
      ClassifierEntry entry;
      entry.id = e.at("id").get<std::string>();
      if (e.contains("grid")) {
        reject_unknown(e, {"id", "grid"}, "classifier '" + entry.id + "'");
        for (auto g : e.at("grid")) {
          g["id"] = entry.id;
          entry.grid.push_back(spec_from_json(g));
        }
      } else {
        entry.grid.push_back(spec_from_json(e));
      }
      c.classifiers.push_back(std::move(entry));
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("rho")) c.rhos = j.at("rho").get<std::vector<double>>();
    if (j.contains("corruption")) {
      const auto& k = j.at("corruption");
      reject_unknown(k, {"train", "validation", "exact_count", "allow_unchanged"}, "corruption");
      c.corruption.train = k.value("train", true);
      c.corruption.validation = k.value("validation", true);
      c.corruption.options.exact_count = k.value("exact_count", false);
      c.corruption.options.allow_unchanged = k.value("allow_unchanged", false);
    }
    if (j.contains("arc")) {
      const auto& a = j.at("arc");
      reject_unknown(a, {"keys", "grid_size"}, "arc");
      if (a.contains("keys")) {
        c.arc_keys.clear();
        for (const auto& k : a.at("keys")) c.arc_keys.push_back(parse_arc_ordering(k.get<std::string>()));
      }
      c.arc_grid_size = a.value("grid_size", c.arc_grid_size);
    }
    if (j.contains("output_dir")) {
      std::filesystem::path out = j.at("output_dir").get<std::string>();
      c.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  json classifiers = json::array();
  for (const auto& e : c.classifiers) {
    json grid = json::array();
    for (const auto& s : e.grid) grid.push_back(spec_to_json(s));
    classifiers.push_back({{"id", e.id}, {"grid", grid}});
  }
  json strategies = json::array();
  for (auto s : c.strategies) strategies.push_back(to_string(s));
  json keys = json::array();
  for (auto k : c.arc_keys) keys.push_back(to_string(k));
  return {{"format_version", kConfigFormatVersion},
          {"dataset",
           {{"path", c.dataset_path.string()},
            {"label_column", c.label_column},
            {"name", c.dataset_name},
            {"categorical", c.schema.categorical_columns},
            {"ignore", c.schema.ignored_columns}}},
          {"split",
           {{"proportions", {c.proportions.train, c.proportions.validation, c.proportions.test}},
            {"count", c.split_count}}},
          {"seed", c.base_seed},
          {"cv_folds", c.cv_folds},
          {"classifiers", classifiers},
          {"strategies", strategies},
          {"rho", c.rhos},
          {"corruption",
           {{"train", c.corruption.train},
            {"validation", c.corruption.validation},
            {"exact_count", c.corruption.options.exact_count},
            {"allow_unchanged", c.corruption.options.allow_unchanged}}},
          {"arc", {{"keys", keys}, {"grid_size", c.arc_grid_size}}},
          {"output_dir", c.output_dir.string()}};
}

namespace {

// Stream ids for derive_seed, so every random decision in a split has its
// own generator.
constexpr std::uint64_t kStreamGridSearch = 0xC0FFEE;
constexpr std::uint64_t kStreamCorruptTrain = 0x7A11;
constexpr std::uint64_t kStreamCorruptValidation = 0x7A12;
constexpr std::uint64_t kStreamClassifier = 0x5EED;
constexpr std::uint64_t kStreamArcRandom = 0xA5C;

std::uint64_t split_seed(const ExperimentConfig& c, std::size_t split) { return c.base_seed + split; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

template <typename Fn>
auto staged(std::size_t split, const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(split, stage, e.what());
  }
}

struct TrainedClassifier {
  ClassifierSpec spec;
  FittedModel model;
};

TrainedClassifier train_classifier(const ExperimentConfig& c, const ClassifierEntry& entry, const Dataset& train,
                                   std::uint64_t seed, std::size_t split) {
  ClassifierSpec spec = entry.grid.front();
  if (entry.grid.size() > 1) {
    spec = staged(split, "grid search '" + entry.id + "'", [&] {
      return grid_search_cv(entry.grid, train.features, train.labels, train.class_count, c.cv_folds,
                            derive_seed(seed, kStreamGridSearch))
          .best;
    });
  }
  spec.id = entry.id;
  // The spec's own seed selects a stream, so identical specs stay identical.
  spec.seed = derive_seed(derive_seed(seed, kStreamClassifier), spec.seed);
  auto model = staged(split, "fit '" + entry.id + "'",
                      [&] { return fit(spec, train.features, train.labels, train.class_count); });
  return {spec, std::move(model)};
}

std::string table_csv(const PredictionTable& t) {
  std::ostringstream out;
  write_predictions(out, t);
  return out.str();
}

std::string arc_csv(const ARCurve& curve) {
  std::ostringstream out;
  write_arc_csv(out, curve);
  return out.str();
}

}  // namespace

std::vector<ScoredOutcome> scored_outcomes(const PredictionTable& table, ArcOrdering key, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredOutcome> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table.rows()[i];
    double score = 0.0;
    switch (key) {
      case ArcOrdering::RobustnessCor:
        score = robustness_cor(row.dist);
        break;
      case ArcOrdering::RobustnessStar:
        score = robustness_star(row.dist);
        break;
      case ArcOrdering::Random:
        score = uniform01(rng);
        break;
    }
    out.push_back({row.instance_id, score, table.correct(i)});
  }
  return out;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset ds = load_csv(config.dataset_path, config.label_column, config.schema);
  const std::string name = config.dataset_name.empty() ? ds.name : config.dataset_name;
  if (!config.output_dir.empty()) std::filesystem::create_directories(config.output_dir);

  const std::size_t n_cls = config.classifiers.size();
  // accuracy[rho][method][split]
  std::map<std::size_t, std::map<std::string, std::vector<double>>> acc;
  ResultTable table;

  for (std::size_t s = 0; s < config.split_count; ++s) {
    const std::uint64_t seed = split_seed(config, s);
    SplitSpec spec = config.proportions;
    spec.seed = seed;
    const auto idx = staged(s, "split", [&] { return split_indices(ds.size(), spec); });
    const Dataset train0 = ds.subset(idx.train);
    const Dataset val0 = ds.subset(idx.validation);
    const Dataset test = ds.subset(idx.test);

    for (std::size_t ri = 0; ri < config.rhos.size(); ++ri) {
      const double rho = config.rhos[ri];
      const std::uint64_t rho_stream = std::bit_cast<std::uint64_t>(rho);
      Dataset train = train0;
      Dataset val = val0;
      CorruptionResult train_corruption, val_corruption;
      staged(s, "corruption", [&] {
        if (config.corruption.train) {
          train_corruption = corrupt_labels(train.labels, rho, ds.class_count,
                                            derive_seed(derive_seed(seed, kStreamCorruptTrain), rho_stream),
                                            config.corruption.options);
          train.labels = train_corruption.labels;
        }
        if (config.corruption.validation) {
          val_corruption = corrupt_labels(val.labels, rho, ds.class_count,
                                          derive_seed(derive_seed(seed, kStreamCorruptValidation), rho_stream),
                                          config.corruption.options);
          val.labels = val_corruption.labels;
        }
        return 0;
      });

      std::vector<PredictionTable> val_pred, test_pred;
      std::vector<ClassifierSpec> chosen;
      for (const auto& entry : config.classifiers) {
        auto trained = train_classifier(config, entry, train, seed, s);
        val_pred.push_back(staged(s, "predict '" + entry.id + "'", [&] { return predict_proba(trained.model, val); }));
        test_pred.push_back(staged(s, "predict '" + entry.id + "'", [&] { return predict_proba(trained.model, test); }));
        chosen.push_back(std::move(trained.spec));
      }

      std::vector<std::size_t> rank(n_cls);
      std::iota(rank.begin(), rank.end(), 0);
      std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        return val_pred[a].correct_count() > val_pred[b].correct_count();
      });
      const std::size_t m1 = rank[0];
      const std::size_t m2 = n_cls > 1 ? rank[1] : rank[0];

      SplitRecord rec;
      rec.split = s;
      rec.rho = rho;
      rec.m1_id = config.classifiers[m1].id;
      rec.m2_id = config.classifiers[m2].id;
      for (std::size_t ci = 0; ci < n_cls; ++ci) {
        const auto& id = config.classifiers[ci].id;
        rec.validation_accuracy[id] = val_pred[ci].accuracy();
        rec.test_accuracy[id] = test_pred[ci].accuracy();
        acc[ri][id].push_back(test_pred[ci].accuracy());
      }
      // SingleBest is always computed: it is the reference for wins_vs_sb.
      std::vector<Strategy> strategies{Strategy::SingleBest};
      for (auto st : config.strategies) {
        if (st != Strategy::SingleBest) strategies.push_back(st);
      }
      for (auto st : strategies) {
        const auto policy = staged(s, "fit " + to_string(st), [&] { return fit_policy(st, val_pred[m1], val_pred[m2]); });
        const auto routed_val = apply_policy(policy, val_pred[m1], val_pred[m2]);
        const auto routed_test = apply_policy(policy, test_pred[m1], test_pred[m2]);
        const auto key = to_string(st);
        rec.validation_accuracy[key] = routed_accuracy(routed_val, val_pred[m1]);
        rec.test_accuracy[key] = routed_accuracy(routed_test, test_pred[m1]);
        acc[ri][key].push_back(rec.test_accuracy[key]);
        rec.policies.push_back(policy);
      }

      if (!config.output_dir.empty()) {
        const auto dir = config.output_dir / ("split_" + std::to_string(s)) / ("rho_" + format_double(rho));
        std::filesystem::create_directories(dir);
        json policies = json::array();
        for (const auto& p : rec.policies) policies.push_back(policy_to_json(p));
        json specs = json::array();
        for (const auto& sp : chosen) specs.push_back(spec_to_json(sp));
        const json summary = {{"split", s},
                              {"seed", seed},
                              {"rho", rho},
                              {"m1_id", rec.m1_id},
                              {"m2_id", rec.m2_id},
                              {"classifier_specs", specs},
                              {"policies", policies},
                              {"validation_accuracy", rec.validation_accuracy},
                              {"test_accuracy", rec.test_accuracy}};
        write_text(dir / "policies.json", summary.dump(2) + "\n");
        json manifest = split_manifest(spec, idx);
        manifest["corrupted_train"] = train_corruption.selected;
        manifest["corrupted_validation"] = val_corruption.selected;
        write_text(dir / "manifest.json", manifest.dump() + "\n");
        for (std::size_t ci = 0; ci < n_cls; ++ci) {
          const auto& id = config.classifiers[ci].id;
          write_text(dir / ("validation_" + id + ".csv"), table_csv(val_pred[ci]));
          write_text(dir / ("test_" + id + ".csv"), table_csv(test_pred[ci]));
          write_text(dir / ("arc_" + id + ".csv"),
                     arc_csv(build_arc(scored_outcomes(test_pred[ci], ArcOrdering::RobustnessCor, 0))));
        }
      }
      table.splits.push_back(std::move(rec));
    }
  }

  for (std::size_t ri = 0; ri < config.rhos.size(); ++ri) {
    auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double sb = mean(acc[ri].at(to_string(Strategy::SingleBest)));
    std::vector<std::string> methods;
    for (const auto& e : config.classifiers) methods.push_back(e.id);
    for (auto st : config.strategies) methods.push_back(to_string(st));
    for (const auto& m : methods) {
      const auto& v = acc[ri].at(m);
      const double mu = mean(v);
      table.rows.push_back({name, config.rhos[ri], m, v, mu, m != to_string(Strategy::SingleBest) && mu > sb});
    }
  }

  if (!config.output_dir.empty()) {
    std::ostringstream results, splits;
    write_result_csv(results, table);
    write_split_csv(splits, table);
    write_text(config.output_dir / "results.csv", results.str());
    write_text(config.output_dir / "splits.csv", splits.str());
    write_text(config.output_dir / "config.json", config_to_json(config).dump(2) + "\n");
  }
  return table;
}

void write_result_csv(std::ostream& out, const ResultTable& table) {
  out << "dataset,rho,method,mean_accuracy,wins_vs_sb\n";
  for (const auto& r : table.rows) {
    out << csv::escape(r.dataset) << ',' << format_double(r.rho) << ',' << csv::escape(r.method) << ','
        << format_double(r.mean_accuracy) << ',' << (r.beats_single_best ? 1 : 0) << '\n';
  }
}

void write_split_csv(std::ostream& out, const ResultTable& table) {
  out << "dataset,rho,method,split,accuracy\n";
  for (const auto& r : table.rows) {
    for (std::size_t s = 0; s < r.split_accuracy.size(); ++s) {
      out << csv::escape(r.dataset) << ',' << format_double(r.rho) << ',' << csv::escape(r.method) << ',' << s
          << ',' << format_double(r.split_accuracy[s]) << '\n';
    }
  }
}

std::string format_summary(const ResultTable& table) {
  std::ostringstream out;
  std::size_t width = 6;
  for (const auto& r : table.rows) width = std::max(width, r.method.size());
  std::string dataset;
  double rho = -1.0;
  for (const auto& r : table.rows) {
    if (r.dataset != dataset || r.rho != rho) {
      dataset = r.dataset;
      rho = r.rho;
      out << dataset << " (rho = " << format_double(rho) << ", " << r.split_accuracy.size() << " splits)\n";
    }
    out << "  " << r.method << std::string(width - r.method.size() + 2, ' ') << format_fixed(r.mean_accuracy, 5)
        << (r.beats_single_best ? "  > SB" : "") << '\n';
  }
  return out.str();
}

std::vector<ArcComparison> arc_compare(const ExperimentConfig& config, const std::vector<ArcOrdering>& keys) {
  config.validate();
  if (keys.empty()) throw InvalidInput("arc_compare: no ordering keys");
  const Dataset ds = load_csv(config.dataset_path, config.label_column, config.schema);
  const std::size_t n_cls = config.classifiers.size();

  std::vector<ArcComparison> out;
  for (const auto& e : config.classifiers) {
    for (auto k : keys) out.push_back({e.id, k, {}, {}});
  }
  for (std::size_t s = 0; s < config.split_count; ++s) {
    const std::uint64_t seed = split_seed(config, s);
    SplitSpec spec = config.proportions;
    spec.seed = seed;
    const auto idx = staged(s, "split", [&] { return split_indices(ds.size(), spec); });
    const Dataset train = ds.subset(idx.train);
    const Dataset test = ds.subset(idx.test);
    for (std::size_t ci = 0; ci < n_cls; ++ci) {
      const auto& entry = config.classifiers[ci];
      const auto trained = train_classifier(config, entry, train, seed, s);
      const auto pred = staged(s, "predict '" + entry.id + "'", [&] { return predict_proba(trained.model, test); });
      for (std::size_t ki = 0; ki < keys.size(); ++ki) {
        const auto outcomes = scored_outcomes(pred, keys[ki], derive_seed(derive_seed(seed, kStreamArcRandom), ci));
        out[ci * keys.size() + ki].per_split.push_back(build_arc(outcomes));
      }
    }
  }
  for (auto& c : out) c.average = average_arcs(c.per_split, config.arc_grid_size);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    for (std::size_t ci = 0; ci < n_cls; ++ci) {
      std::vector<SvgSeries> series;
      for (std::size_t ki = 0; ki < keys.size(); ++ki) {
        const auto& c = out[ci * keys.size() + ki];
        write_text(config.output_dir / ("arc_" + c.classifier_id + "_" + to_string(c.key) + ".csv"),
                   arc_csv(c.average));
        series.push_back({to_string(c.key), &c.average});
      }
      const auto& id = config.classifiers[ci].id;
      write_text(config.output_dir / ("arc_" + id + ".svg"),
                 render_arc_svg(series, id + ": mean ARC over " + std::to_string(config.split_count) + " splits"));
    }
  }
  return out;
}

}  // namespace robq
