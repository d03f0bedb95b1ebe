#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "robq/cli.hpp"
#include "robq/prediction_table.hpp"
#include "robq/selection.hpp"

using namespace robq;
namespace fs = std::filesystem;

namespace {

const std::string kData = ROBQ_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "robq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("robq_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("score on the happy-path file writes one row per instance") {
  const auto dir = scratch("score");
  const auto r = run({"score", "--preds", kData + "/preds_happy.csv", "--out", (dir / "r.csv").string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(dir / "r.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "instance_id,predicted_class,r_cor,r_star");
  CHECK(rows[1].rfind("a,0,", 0) == 0);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"score", "--preds", kData + "/preds_happy.csv"}).code == kExitUsage);
  CHECK(run({"score", "--preds", kData + "/preds_happy.csv", "--out", "x", "--bogus"}).code == kExitUsage);
  CHECK(run({"arc", "--preds", kData + "/preds_happy.csv"}).code == kExitUsage);
  CHECK(run({"ds"}).code == kExitUsage);
  CHECK(run({"oracle", "verify", "--classes", "1"}).code == kExitUsage);
  CHECK(run({"score", "--help"}).code == kExitOk);
}

TEST_CASE("data errors exit 3") {
  const auto dir = scratch("bad");
  write(dir / "bad.csv", "instance_id,true_label,p_0,p_1\na,0,0.7,0.7\n");
  const auto r = run({"score", "--preds", (dir / "bad.csv").string(), "--out", (dir / "r.csv").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("line 2") != std::string::npos);

  CHECK(run({"data", "split", "--data", kData + "/wdbc.csv", "--label", "nope", "--out", dir.string()}).code ==
        kExitData);
  write(dir / "cfg.json", "{\"format_version\": 1, \"dataset\": {}}");
  CHECK(run({"experiment", "run", "--config", (dir / "cfg.json").string()}).code == kExitData);
}

TEST_CASE("ds fit then ds apply reproduces the fitted validation routing") {
  const auto dir = scratch("ds");
  write(dir / "m1.csv",
        "instance_id,true_label,p_0,p_1\n"
        "a,0,0.9,0.1\nb,1,0.55,0.45\nc,1,0.4,0.6\nd,0,0.52,0.48\n");
  write(dir / "m2.csv",
        "instance_id,true_label,p_0,p_1\n"
        "a,0,0.6,0.4\nb,1,0.1,0.9\nc,1,0.3,0.7\nd,0,0.45,0.55\n");
  const auto policy = (dir / "policy.json").string();
  auto r = run({"ds", "fit", "--strategy", "RS-D", "--m1", (dir / "m1.csv").string(), "--m2",
                (dir / "m2.csv").string(), "--out", policy});
  REQUIRE(r.code == kExitOk);
  r = run({"ds", "apply", "--policy", policy, "--m1", (dir / "m1.csv").string(), "--m2", (dir / "m2.csv").string(),
           "--out", (dir / "routed.csv").string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(dir / "routed.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "instance_id,chosen_model,predicted_class,ratio");
  // Only b is fixed by m2 without breaking d.
  CHECK(rows[2].rfind("b,m2,1,", 0) == 0);
  CHECK(rows[4].rfind("d,m1,0,", 0) == 0);
  CHECK(r.out.find("accuracy 1.00000") != std::string::npos);

  write(dir / "broken.json", "{\"strategy\": \"RS-X\"}");
  CHECK(run({"ds", "apply", "--policy", (dir / "broken.json").string(), "--m1", (dir / "m1.csv").string(), "--m2",
             (dir / "m2.csv").string(), "--out", (dir / "x.csv").string()})
            .code == kExitData);
}

TEST_CASE("arc writes csv and svg, external scores are joined by id") {
  const auto dir = scratch("arc");
  auto r = run({"arc", "--preds", kData + "/preds_happy.csv", "--csv", (dir / "a.csv").string(), "--svg",
                (dir / "a.svg").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(lines(dir / "a.csv").front() == "rejection_fraction,accuracy");
  CHECK(lines(dir / "a.svg").front().rfind("<svg", 0) == 0);

  write(dir / "s.csv", "instance_id,conf\nc,3\nb,2\na,1\n");
  r = run({"arc", "--preds", kData + "/preds_happy.csv", "--key", "external", "--scores", (dir / "s.csv").string(),
           "--score-column", "conf", "--csv", (dir / "e.csv").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(lines(dir / "e.csv").size() == 4);
  write(dir / "s2.csv", "instance_id,conf\nc,3\n");
  r = run({"arc", "--preds", kData + "/preds_happy.csv", "--key", "external", "--scores", (dir / "s2.csv").string(),
           "--score-column", "conf", "--csv", (dir / "e.csv").string()});
  CHECK(r.code == kExitData);
}

TEST_CASE("data split and data corrupt keep the rows intact") {
  const auto dir = scratch("data");
  auto r = run({"data", "split", "--data", kData + "/wdbc.csv", "--label", "diagnosis", "--seed", "3", "--out",
                (dir / "split").string()});
  REQUIRE(r.code == kExitOk);
  const auto original = lines(kData + "/wdbc.csv");
  std::size_t total = 0;
  for (const char* part : {"train", "validation", "test"}) {
    const auto rows = lines(dir / "split" / (std::string(part) + ".csv"));
    CHECK(rows.front() == original.front());
    total += rows.size() - 1;
  }
  CHECK(total == original.size() - 1);
  CHECK(fs::exists(dir / "split" / "manifest.json"));

  r = run({"data", "corrupt", "--data", kData + "/wdbc.csv", "--label", "diagnosis", "--rho", "0.2", "--seed", "1",
           "--out", (dir / "c.csv").string()});
  REQUIRE(r.code == kExitOk);
  const auto corrupted = lines(dir / "c.csv");
  REQUIRE(corrupted.size() == original.size());
  std::size_t changed = 0;
  for (std::size_t i = 1; i < original.size(); ++i) changed += corrupted[i] != original[i];
  CHECK(changed > 60);
  CHECK(changed < 170);
  CHECK(run({"data", "corrupt", "--data", kData + "/wdbc.csv", "--label", "diagnosis", "--rho", "1.5", "--out",
             (dir / "c.csv").string()})
            .code == kExitUsage);
}

TEST_CASE("oracle verify reports PASS") {
  const auto r = run({"oracle", "verify", "--trials", "5", "--seed", "7", "--classes", "3", "--features", "4"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("experiment run is repeatable through the CLI") {
  const auto dir = scratch("experiment");
  const auto config = kData + "/wdbc_experiment.json";
  REQUIRE(run({"experiment", "run", "--config", config, "--out", (dir / "a").string()}).code == kExitOk);
  REQUIRE(run({"experiment", "run", "--config", config, "--out", (dir / "b").string()}).code == kExitOk);
  CHECK(lines(dir / "a" / "results.csv") == lines(dir / "b" / "results.csv"));
  const auto r = run({"experiment", "arc", "--config", config, "--out", (dir / "arc").string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "arc" / "arc_rf.svg"));
}
