#include <doctest.h>

#include <sstream>

#include "robq/error.hpp"
#include "robq/prediction_table.hpp"

using namespace robq;

TEST_CASE("read a well-formed prediction file") {
  std::istringstream in(
      "instance_id,true_label,p_0,p_1,p_2\n"
      "a,0,0.6,0.3,0.1\n"
      "b,2,0.1,0.2,0.7\n"
      "c,1,0.2,0.2,0.6\n");
  const auto t = read_predictions(in, "gb");
  CHECK(t.size() == 3);
  CHECK(t.class_count() == 3);
  CHECK(t.model_id() == "gb");
  CHECK(t.correct_count() == 2);

  std::ostringstream out;
  write_predictions(out, t);
  std::istringstream again(out.str());
  const auto t2 = read_predictions(again, "gb");
  for (std::size_t i = 0; i < 3; ++i) CHECK(t2.rows()[i].dist == t.rows()[i].dist);
}

TEST_CASE("validation errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_predictions(in, "m");
    } catch (const ValidationError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("instance_id,true_label,p_0,p_1\na,0,0.5,0.5\nb,1,0.5,0.48\n") == 3);
  CHECK(line_of("instance_id,true_label,p_0,p_1\na,0,0.5,0.5\na,1,0.5,0.5\n") == 3);
  CHECK(line_of("instance_id,true_label,p_0,p_1\na,2,0.5,0.5\n") == 2);
  CHECK(line_of("instance_id,true_label,p_0,p_1\na,0,0.5\n") == 2);
  CHECK(line_of("instance_id,true_label,p_0,p_1\na,0,x,0.5\n") == 2);
  CHECK(line_of("id,label,p_0,p_1\n") == 1);
  CHECK(line_of("instance_id,true_label,p_0,p_2\n") == 1);
}

TEST_CASE("table invariants") {
  const ClassDistribution d({0.5, 0.5});
  CHECK_THROWS_AS(PredictionTable("m", 2, {{"a", 0, d}, {"a", 1, d}}), InvalidInput);
  CHECK_THROWS_AS(PredictionTable("m", 2, {{"a", 2, d}}), InvalidInput);
  CHECK_THROWS_AS(PredictionTable("m", 3, {{"a", 0, d}}), InvalidInput);
  CHECK(PredictionTable("m", 2, {}).accuracy() == 0.0);
}

TEST_CASE("ingest from disk uses the file stem as model id") {
  const auto t = ingest_predictions(ROBQ_TEST_DATA_DIR "/preds_happy.csv");
  CHECK(t.model_id() == "preds_happy");
  CHECK(t.size() == 3);
  CHECK_THROWS_AS(ingest_predictions(ROBQ_TEST_DATA_DIR "/missing.csv"), ValidationError);
}
