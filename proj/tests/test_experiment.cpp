#include <doctest.h>

#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "robq/error.hpp"
#include "robq/experiment.hpp"
#include "synthetic.hpp"

using namespace robq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("robq_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ClassifierEntry entry(const std::string& id, ClassifierSpec spec) {
  spec.id = id;
  return {id, {spec}};
}

ExperimentConfig base_config(const fs::path& dir, std::size_t splits = 4) {
  const auto data = dir / "disjoint.csv";
  if (!fs::exists(data)) testing::write_disjoint_dataset(data, 600, 11);
  ExperimentConfig c;
  c.dataset_path = data;
  c.label_column = "label";
  c.split_count = splits;
  c.base_seed = 100;
  c.classifiers = {entry("knn_a", {"", KnnParams{15, 1.0}, 0, {0}}),
                   entry("nb_b", {"", GaussianNbParams{}, 0, {1}})};
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const nlohmann::json j = {{"format_version", 1},
                            {"dataset", {{"path", "d.csv"}, {"label_column", "y"}}},
                            {"split", {{"proportions", {0.6, 0.2, 0.2}}, {"count", 3}}},
                            {"seed", 9},
                            {"classifiers",
                             {{{"id", "nb"}, {"kind", "gaussian_nb"}},
                              {{"id", "knn"}, {"grid", {{{"kind", "knn"}, {"k", 3}}, {{"kind", "knn"}, {"k", 7}}}}}}},
                            {"rho", {0.0, 0.1}},
                            {"output_dir", "out"}};
  const auto c = config_from_json(j, "/base");
  CHECK(c.dataset_path == fs::path("/base/d.csv"));
  CHECK(c.output_dir == fs::path("/base/out"));
  CHECK(c.split_count == 3);
  CHECK(c.base_seed == 9);
  REQUIRE(c.classifiers.size() == 2);
  CHECK(c.classifiers[1].grid.size() == 2);
  CHECK(c.classifiers[1].grid[1].id == "knn");
  CHECK(c.rhos == std::vector<double>{0.0, 0.1});

  auto round = config_from_json(config_to_json(c));
  CHECK(config_to_json(round) == config_to_json(c));

  auto bad = j;
  bad["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(bad), ValidationError);
  bad = j;
  bad["format_version"] = 2;
  CHECK_THROWS_AS(config_from_json(bad), ValidationError);
  bad = j;
  bad["rho"] = {1.5};
  CHECK_THROWS_AS(config_from_json(bad), ValidationError);
  bad = j;
  bad["classifiers"] = {{{"id", "nb"}, {"kind", "gaussian_nb"}}};
  CHECK_THROWS_AS(config_from_json(bad), ValidationError);  // RS-D needs two
}

TEST_CASE("single classifier with SingleBest only reports that classifier") {
  auto dir = scratch("single");
  auto c = base_config(dir);
  c.classifiers.resize(1);
  c.strategies = {Strategy::SingleBest};
  const auto t = run_experiment(c);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].method == "knn_a");
  CHECK(t.rows[1].method == "SingleBest");
  CHECK(t.rows[0].split_accuracy == t.rows[1].split_accuracy);
  CHECK_FALSE(t.rows[1].beats_single_best);
}

TEST_CASE("identical classifiers make every strategy equal to M1") {
  auto dir = scratch("identical");
  auto c = base_config(dir);
  c.classifiers = {entry("m", {"", KnnParams{5, 1.0}, 3, {}}), entry("m_copy", {"", KnnParams{5, 1.0}, 3, {}})};
  const auto t = run_experiment(c);
  for (const auto& s : t.splits) {
    CHECK(s.m1_id == "m");
    CHECK(s.test_accuracy.at("RS-D") == s.test_accuracy.at("m"));
    CHECK(s.test_accuracy.at("RS-I") == s.test_accuracy.at("m"));
    CHECK(s.test_accuracy.at("SingleBest") == s.test_accuracy.at("m"));
  }
}

TEST_CASE("rho = 0 matches an uncorrupted run byte for byte") {
  auto dir = scratch("rho0");
  auto c = base_config(dir);
  c.rhos = {0.0};
  c.output_dir = dir / "a";
  run_experiment(c);
  c.corruption.train = false;
  c.corruption.validation = false;
  c.output_dir = dir / "b";
  run_experiment(c);
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));
  CHECK(slurp(dir / "a" / "splits.csv") == slurp(dir / "b" / "splits.csv"));
}

TEST_CASE("runs are deterministic and write the artifacts") {
  auto dir = scratch("determinism");
  auto c = base_config(dir, 3);
  c.rhos = {0.0, 0.2};
  c.output_dir = dir / "a";
  run_experiment(c);
  c.output_dir = dir / "b";
  run_experiment(c);
  for (const char* f : {"results.csv", "splits.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto split_dir = dir / "a" / "split_2" / "rho_0.2";
  CHECK(slurp(split_dir / "policies.json") == slurp(dir / "b" / "split_2" / "rho_0.2" / "policies.json"));
  for (const char* f : {"manifest.json", "test_knn_a.csv", "validation_nb_b.csv", "arc_nb_b.csv"}) {
    CHECK(fs::exists(split_dir / f));
  }
  const auto results = slurp(dir / "a" / "results.csv");
  CHECK(results.rfind("dataset,rho,method,mean_accuracy,wins_vs_sb\n", 0) == 0);
}

TEST_CASE("corruption changes the validation labels for rho > 0") {
  auto dir = scratch("corrupt");
  auto c = base_config(dir, 2);
  c.rhos = {0.0, 0.3};
  const auto t = run_experiment(c);
  REQUIRE(t.splits.size() == 4);
  // Validation accuracy against noisy labels drops; test labels stay clean.
  CHECK(t.splits[1].validation_accuracy.at("knn_a") < t.splits[0].validation_accuracy.at("knn_a"));
}

TEST_CASE("RS-D never loses to SingleBest on validation") {
  auto dir = scratch("rsd");
  auto c = base_config(dir, 6);
  c.rhos = {0.0, 0.1};
  const auto t = run_experiment(c);
  for (const auto& s : t.splits) {
    CHECK(s.validation_accuracy.at("RS-D") >= s.validation_accuracy.at("SingleBest"));
  }
}

TEST_CASE("stage failures carry the split index") {
  auto dir = scratch("failure");
  auto c = base_config(dir, 2);
  c.cv_folds = 100000;
  c.classifiers[0].grid.push_back(c.classifiers[0].grid[0]);
  try {
    run_experiment(c);
    FAIL("expected ExperimentError");
  } catch (const ExperimentError& e) {
    CHECK(std::string(e.what()).find("split 0, grid search 'knn_a'") == 0);
  }
}

TEST_CASE("a perfectly ranked table puts the robustness ARC above the random one") {
  std::mt19937_64 rng(5);
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < 400; ++i) {
    const double top = 0.5 + 0.5 * (static_cast<double>(i) + 0.5) / 400.0;
    // Everything above the median confidence is right, everything below wrong.
    const ClassIndex label = i >= 200 ? 0 : 1;
    rows.push_back({std::to_string(i), label, ClassDistribution({top, 1.0 - top})});
  }
  PredictionTable table("m", 2, rows);
  const auto cor = build_arc(scored_outcomes(table, ArcOrdering::RobustnessCor, 0));
  const auto star = build_arc(scored_outcomes(table, ArcOrdering::RobustnessStar, 0));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rnd = build_arc(scored_outcomes(table, ArcOrdering::Random, seed));
    for (int g = 0; g <= 100; ++g) {
      const double f = g / 100.0 * (1.0 - 1.0 / 400.0);
      CHECK(arc_value_at(cor, f) >= arc_value_at(rnd, f));
    }
  }
  REQUIRE(cor.points.size() == star.points.size());
  for (std::size_t k = 0; k < cor.points.size(); ++k) CHECK(cor.points[k].accuracy == star.points[k].accuracy);
}

TEST_CASE("arc_compare averages per key and writes files") {
  auto dir = scratch("arc");
  auto c = base_config(dir, 3);
  c.output_dir = dir / "out";
  const auto res = arc_compare(c, {ArcOrdering::RobustnessCor, ArcOrdering::Random});
  REQUIRE(res.size() == 4);
  CHECK(res[0].classifier_id == "knn_a");
  CHECK(res[0].per_split.size() == 3);
  CHECK(res[0].average.points.size() == kDefaultArcGridSize);
  CHECK(fs::exists(dir / "out" / "arc_knn_a_robustness_cor.csv"));
  CHECK(fs::exists(dir / "out" / "arc_nb_b.svg"));
}
