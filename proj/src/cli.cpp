#include "robq/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "robq/csv.hpp"
#include "robq/error.hpp"
#include "robq/experiment.hpp"
#include "robq/format.hpp"
#include "robq/oracle.hpp"

namespace robq {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::vector<std::vector<std::string>> read_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  csv::LineReader reader(in);
  std::vector<std::vector<std::string>> records;
  while (auto r = reader.next()) records.push_back(std::move(*r));
  if (records.empty()) throw ValidationError(path.string() + " is empty");
  return records;
}

void write_record(std::ostream& out, const std::vector<std::string>& record) {
  for (std::size_t i = 0; i < record.size(); ++i) out << (i ? "," : "") << csv::escape(record[i]);
  out << '\n';
}

std::set<std::string> comma_list(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

// Flags shared by the `data` subcommands.
struct DataArgs {
  std::string path;
  std::string label;
  std::string categorical;
  std::string ignore;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "input CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--label", label, "label column")->required();
    cmd->add_option("--categorical", categorical, "comma-separated categorical columns");
    cmd->add_option("--ignore", ignore, "comma-separated columns to drop");
  }
  Dataset load() const { return load_csv(path, label, {comma_list(categorical), comma_list(ignore)}); }
};

std::unordered_map<std::string, double> read_external_scores(const fs::path& path, const std::string& column) {
  const auto records = read_records(path);
  const auto& header = records.front();
  std::size_t id_col = header.size(), score_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "instance_id") id_col = c;
    if (header[c] == column) score_col = c;
  }
  if (id_col == header.size()) throw ValidationError(path.string() + ": no instance_id column", 1);
  if (score_col == header.size()) throw ValidationError(path.string() + ": no column '" + column + "'", 1);
  std::unordered_map<std::string, double> scores;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) throw ValidationError(path.string() + ": wrong field count in record " + std::to_string(r));
    const auto v = csv::parse_double(rec[score_col]);
    if (!v || std::isnan(*v)) throw ValidationError(path.string() + ": bad score '" + rec[score_col] + "'");
    if (!scores.emplace(rec[id_col], *v).second) throw ValidationError(path.string() + ": duplicate id '" + rec[id_col] + "'");
  }
  return scores;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robustness scores, accuracy-rejection curves and robustness-based model selection", "robq"};
  app.require_subcommand(1);
  std::function<void()> action;

  // score
  auto* score = app.add_subcommand("score", "prediction CSV -> per-instance robustness CSV");
  std::string preds_path, out_path;
  score->add_option("--preds", preds_path, "prediction CSV")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out_path, "output CSV")->required();
  score->callback([&] {
    action = [&] {
      const auto table = ingest_predictions(preds_path);
      auto f = open_out(out_path);
      f << "instance_id,predicted_class,r_cor,r_star\n";
      double total = 0.0;
      for (const auto& row : table.rows()) {
        const auto r = robustness(row.dist);
        total += r.r_cor;
        f << csv::escape(row.instance_id) << ',' << r.top << ',' << format_double(r.r_cor) << ','
          << format_double(r.r_star) << '\n';
      }
      out << "scored " << table.size() << " rows from model '" << table.model_id() << "'";
      if (!table.empty()) out << ", mean r_cor " << format_fixed(total / static_cast<double>(table.size()), 5);
      out << '\n';
    };
  });

  // arc
  auto* arc = app.add_subcommand("arc", "accuracy-rejection curve of a prediction CSV");
  std::string arc_key = "robustness_cor", scores_path, score_column = "score", csv_path, svg_path;
  std::uint64_t arc_seed = 0;
  arc->add_option("--preds", preds_path, "prediction CSV")->required()->check(CLI::ExistingFile);
  arc->add_option("--key", arc_key, "robustness_cor | robustness_star | random | external")
      ->check(CLI::IsMember({"robustness_cor", "robustness_star", "random", "external"}));
  arc->add_option("--scores", scores_path, "CSV with instance_id and a score column (key external)")
      ->check(CLI::ExistingFile);
  arc->add_option("--score-column", score_column, "score column in --scores");
  arc->add_option("--seed", arc_seed, "seed for the random key");
  arc->add_option("--csv", csv_path, "write the curve as CSV");
  arc->add_option("--svg", svg_path, "write the curve as SVG");
  arc->callback([&] {
    if (csv_path.empty() && svg_path.empty()) throw CLI::ValidationError("--csv/--svg", "at least one output is required");
    if ((arc_key == "external") != !scores_path.empty()) {
      throw CLI::ValidationError("--scores", "is required with, and only with, --key external");
    }
    action = [&] {
      const auto table = ingest_predictions(preds_path);
      std::vector<ScoredOutcome> outcomes;
      if (arc_key == "external") {
        const auto scores = read_external_scores(scores_path, score_column);
        for (std::size_t i = 0; i < table.size(); ++i) {
          const auto& id = table.rows()[i].instance_id;
          const auto it = scores.find(id);
          if (it == scores.end()) throw ValidationError("no external score for instance '" + id + "'");
          outcomes.push_back({id, it->second, table.correct(i)});
        }
      } else {
        outcomes = scored_outcomes(table, parse_arc_ordering(arc_key), arc_seed);
      }
      const auto curve = build_arc(outcomes);
      if (!csv_path.empty()) {
        auto f = open_out(csv_path);
        write_arc_csv(f, curve);
      }
      if (!svg_path.empty()) {
        const SvgSeries series[] = {{arc_key, &curve}};
        open_out(svg_path) << render_arc_svg(series, table.model_id());
      }
      out << "ARC of '" << table.model_id() << "' by " << arc_key << ": n = " << curve.n << ", accuracy "
          << format_fixed(arc_value_at(curve, 0.0), 5) << " at 0, " << format_fixed(arc_value_at(curve, 0.25), 5)
          << " at 0.25, " << format_fixed(arc_value_at(curve, 0.5), 5) << " at 0.5\n";
    };
  });

  // ds fit / ds apply
  auto* ds = app.add_subcommand("ds", "robustness-based dynamic selection");
  ds->require_subcommand(1);
  std::string strategy = "RS-D", m1_path, m2_path, policy_path;
  auto* ds_fit = ds->add_subcommand("fit", "fit a policy on validation predictions of M1 and M2");
  ds_fit->add_option("--strategy", strategy, "SingleBest | RS-D | RS-I");
  ds_fit->add_option("--m1", m1_path, "validation predictions of the best model")->required()->check(CLI::ExistingFile);
  ds_fit->add_option("--m2", m2_path, "validation predictions of the runner-up")->required()->check(CLI::ExistingFile);
  ds_fit->add_option("--out", policy_path, "policy JSON")->required();
  ds_fit->callback([&] {
    action = [&] {
      const auto m1 = ingest_predictions(m1_path);
      const auto m2 = ingest_predictions(m2_path);
      const auto policy = fit_policy(parse_strategy(strategy), m1, m2);
      open_out(policy_path) << policy_to_json(policy).dump(2) << '\n';
      const auto routed = apply_policy(policy, m1, m2);
      const auto to_m2 = std::count_if(routed.begin(), routed.end(), [&](const auto& r) { return policy.routes_to_m2(r.ratio); });
      out << to_string(policy.strategy) << ": threshold " << format_double(policy.threshold) << ", validation accuracy "
          << format_fixed(routed_accuracy(routed, m1), 5) << " (M1 alone " << format_fixed(m1.accuracy(), 5) << "), "
          << to_m2 << " of " << routed.size() << " routed to " << policy.m2_id << '\n';
    };
  });
  auto* ds_apply = ds->add_subcommand("apply", "route predictions with a fitted policy");
  ds_apply->add_option("--policy", policy_path, "policy JSON")->required()->check(CLI::ExistingFile);
  ds_apply->add_option("--m1", m1_path, "predictions of M1")->required()->check(CLI::ExistingFile);
  ds_apply->add_option("--m2", m2_path, "predictions of M2")->required()->check(CLI::ExistingFile);
  ds_apply->add_option("--out", out_path, "routed predictions CSV")->required();
  ds_apply->callback([&] {
    action = [&] {
      std::ifstream in(policy_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError(policy_path + " is not valid JSON: " + e.what());
      }
      const auto policy = policy_from_json(j);
      const auto m1 = ingest_predictions(m1_path);
      const auto m2 = ingest_predictions(m2_path);
      const auto routed = apply_policy(policy, m1, m2);
      auto f = open_out(out_path);
      f << "instance_id,chosen_model,predicted_class,ratio\n";
      for (const auto& r : routed) {
        f << csv::escape(r.instance_id) << ',' << csv::escape(r.chosen_model) << ',' << r.predicted_class << ','
          << format_double(r.ratio) << '\n';
      }
      out << "routed " << routed.size() << " rows, accuracy " << format_fixed(routed_accuracy(routed, m1), 5)
          << " (M1 alone " << format_fixed(m1.accuracy(), 5) << ")\n";
    };
  });

  // data split / data corrupt
  auto* data = app.add_subcommand("data", "dataset utilities");
  data->require_subcommand(1);
  DataArgs data_args;
  std::uint64_t data_seed = 0;
  std::vector<double> proportions{0.7, 0.15, 0.15};
  bool stratified = false;
  std::string out_dir;
  auto* data_split = data->add_subcommand("split", "seeded train / validation / test split");
  data_args.attach(data_split);
  data_split->add_option("--proportions", proportions, "train validation test")->expected(3);
  data_split->add_option("--seed", data_seed, "split seed");
  data_split->add_flag("--stratified", stratified, "keep class proportions in every part");
  data_split->add_option("--out", out_dir, "output directory")->required();
  data_split->callback([&] {
    action = [&] {
      const SplitSpec spec{proportions[0], proportions[1], proportions[2], data_seed};
      const auto dataset = data_args.load();
      const auto idx = stratified ? stratified_split_indices(dataset.labels, spec) : split_indices(dataset.size(), spec);
      const auto records = read_records(data_args.path);
      fs::create_directories(out_dir);
      const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
          {"train", &idx.train}, {"validation", &idx.validation}, {"test", &idx.test}};
      for (const auto& [part, rows] : parts) {
        auto f = open_out(fs::path(out_dir) / (std::string(part) + ".csv"));
        write_record(f, records.front());
        for (auto r : *rows) write_record(f, records[r + 1]);
      }
      open_out(fs::path(out_dir) / "manifest.json") << split_manifest(spec, idx).dump() << '\n';
      out << "split " << dataset.size() << " rows: " << idx.train.size() << " train, " << idx.validation.size()
          << " validation, " << idx.test.size() << " test\n";
    };
  });
  auto* data_corrupt = data->add_subcommand("corrupt", "re-draw a fraction rho of the labels");
  data_args.attach(data_corrupt);
  double rho = 0.0;
  bool exact_count = false;
  data_corrupt->add_option("--rho", rho, "corruption rate")->required()->check(CLI::Range(0.0, 1.0));
  data_corrupt->add_option("--seed", data_seed, "corruption seed");
  data_corrupt->add_flag("--exact-count", exact_count, "corrupt exactly floor(rho * n) rows");
  data_corrupt->add_option("--out", out_path, "output CSV")->required();
  data_corrupt->callback([&] {
    action = [&] {
      const auto dataset = data_args.load();
      const auto result = corrupt_labels(dataset.labels, rho, dataset.class_count, data_seed, {exact_count, false});
      auto records = read_records(data_args.path);
      const auto& header = records.front();
      const auto label_col = static_cast<std::size_t>(
          std::find(header.begin(), header.end(), data_args.label) - header.begin());
      auto f = open_out(out_path);
      write_record(f, header);
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto& rec = records[i + 1];
        rec[label_col] = dataset.class_names[result.labels[i]];
        write_record(f, rec);
      }
      out << "corrupted " << result.selected.size() << " of " << dataset.size() << " labels (" << result.changed
          << " changed)\n";
    };
  });

  // oracle verify
  auto* oracle = app.add_subcommand("oracle", "brute-force checks of the closed-form robustness");
  oracle->require_subcommand(1);
  auto* verify = oracle->add_subcommand("verify", "check the witness and the search bound on random joint models");
  oracle::VerificationOptions vopt;
  std::string report_path;
  verify->add_option("--seed", vopt.seed, "seed");
  verify->add_option("--trials", vopt.trials, "number of random joint models")->check(CLI::PositiveNumber);
  verify->add_option("--classes", vopt.class_count, "classes K")->check(CLI::Range(2, 64));
  verify->add_option("--features", vopt.feature_count, "feature values M")->check(CLI::PositiveNumber);
  verify->add_option("--budget", vopt.search_budget, "search budget per column")->check(CLI::PositiveNumber);
  verify->add_option("--report", report_path, "also write the report to this file");
  int verify_status = kExitOk;
  verify->callback([&] {
    action = [&] {
      const auto report = oracle::verify_closed_form(vopt);
      const auto text = oracle::format_report(report, vopt);
      out << text;
      if (!report_path.empty()) open_out(report_path) << text;
      if (!report.passed()) verify_status = kExitData;
    };
  });

  // experiment run / experiment arc
  auto* experiment = app.add_subcommand("experiment", "multi-split experiments");
  experiment->require_subcommand(1);
  std::string config_path;
  auto* run = experiment->add_subcommand("run", "run the selection experiment");
  run->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->callback([&] {
    action = [&] {
      auto config = load_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      const auto table = run_experiment(config);
      out << format_summary(table);
      if (!config.output_dir.empty()) out << "results in " << config.output_dir.string() << '\n';
    };
  });
  auto* arcs = experiment->add_subcommand("arc", "average test ARCs per ordering key");
  std::vector<std::string> keys;
  arcs->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  arcs->add_option("--out", out_dir, "output directory (overrides the config)");
  arcs->add_option("--keys", keys, "ordering keys (default: from config)")
      ->check(CLI::IsMember({"robustness_cor", "robustness_star", "random"}));
  arcs->callback([&] {
    action = [&] {
      auto config = load_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      std::vector<ArcOrdering> k = config.arc_keys;
      if (!keys.empty()) {
        k.clear();
        for (const auto& s : keys) k.push_back(parse_arc_ordering(s));
      }
      for (const auto& c : arc_compare(config, k)) {
        out << c.classifier_id << " by " << to_string(c.key) << ": " << format_fixed(arc_value_at(c.average, 0.0), 5)
            << " at 0, " << format_fixed(arc_value_at(c.average, 0.25), 5) << " at 0.25, "
            << format_fixed(arc_value_at(c.average, 0.5), 5) << " at 0.5\n";
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "robq: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }
  try {
    if (action) action();
    return verify_status;
  } catch (const ExperimentError& e) {
    err << "robq: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "robq: " << e.what() << '\n';
    return kExitData;
  } catch (const InvalidInput& e) {
    err << "robq: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "robq: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "robq: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace robq
