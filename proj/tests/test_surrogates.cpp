#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "betrun/surrogates.hpp"

using namespace betrun;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "betrun-surrogate-tests";
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

CheckpointFile run_instance(SurrogateAdapter& adapter, const SubjectId& subject,
                            std::uint64_t seed, Millis timeout,
                            const std::string& file_name) {
  fs::path path = scratch_dir() / file_name;
  auto handle = adapter.spawn(subject, seed, timeout, path);
  handle->await();
  return read_checkpoint_file(path);
}

}  // namespace

TEST_CASE("suite lines cycle colon lists and number ids per family") {
  SubjectSuite suite = make_subject_suite({
      "# a comment",
      "",
      "mvc,3,vertices=10:14,density=0.4",
      "plateau,2,decay=0.01",
  });
  REQUIRE(suite.subjects.size() == 5);
  CHECK(suite.subjects[0].id == "mvc-v10-00");
  CHECK(suite.subjects[1].id == "mvc-v14-01");
  CHECK(suite.subjects[2].id == "mvc-v10-02");  // list wrapped around
  CHECK(suite.subjects[0].vertices == 10);
  CHECK(suite.subjects[1].vertices == 14);
  CHECK(suite.subjects[2].vertices == 10);
  CHECK(suite.subjects[0].edge_density == 0.4);
  CHECK(suite.subjects[3].id == "plateau-00");
  CHECK(suite.subjects[4].id == "plateau-01");
  CHECK(suite.subjects[3].decay_rate == 0.01);

  CHECK(suite.find("mvc-v14-01") == &suite.subjects[1]);
  CHECK(suite.find("missing") == nullptr);
}

TEST_CASE("structure seeds derive from the id, so equal parameters still "
          "give distinct instances") {
  SubjectSuite suite = make_subject_suite({"plateau,2"});
  CHECK(suite.subjects[0].structure_seed != suite.subjects[1].structure_seed);
}

TEST_CASE("malformed suite lines are rejected") {
  CHECK_THROWS_AS(make_subject_suite({"mvc"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"sudoku,2"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"mvc,0"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"mvc,2,bogus=1"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"mvc,2,cities=5"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"mvc,2,vertices=100"}), ConfigError);
  CHECK_THROWS_AS(make_subject_suite({"tsp,1,layout=unit-square"}),
                  ConfigError);  // unit square means exactly 4 cities
  CHECK_NOTHROW(make_subject_suite({"tsp,1,cities=4,layout=unit-square"}));
}

TEST_CASE("one (subject, seed) pair produces a byte-identical stream") {
  SubjectSuite suite = make_subject_suite({"mvc,1,vertices=12"});
  SurrogateAdapter adapter(suite);
  run_instance(adapter, "mvc-v12-00", 5, Millis{600}, "det-a.ckpt");
  run_instance(adapter, "mvc-v12-00", 5, Millis{600}, "det-b.ckpt");
  run_instance(adapter, "mvc-v12-00", 6, Millis{600}, "det-c.ckpt");
  CHECK(file_bytes(scratch_dir() / "det-a.ckpt") ==
        file_bytes(scratch_dir() / "det-b.ckpt"));
  CHECK(file_bytes(scratch_dir() / "det-a.ckpt") !=
        file_bytes(scratch_dir() / "det-c.ckpt"));
}

TEST_CASE("checkpoints land exactly on interval marks inside the timeout") {
  SubjectSuite suite = make_subject_suite({"mvc,1,vertices=12"});
  SurrogateAdapter adapter(suite);
  CheckpointFile file =
      run_instance(adapter, "mvc-v12-00", 1, Millis{1000}, "marks.ckpt");
  REQUIRE(file.records.size() == 10);
  for (std::size_t i = 0; i < file.records.size(); ++i)
    CHECK(file.records[i].elapsed == Millis{100 * (std::int64_t)(i + 1)});

  CheckpointFile odd =
      run_instance(adapter, "mvc-v12-00", 1, Millis{150}, "odd.ckpt");
  REQUIRE(odd.records.size() == 1);  // 150 is not a mark, nothing lands there
  CHECK(odd.records[0].elapsed == Millis{100});
}

TEST_CASE("the best-so-far score never worsens along a stream") {
  SubjectSuite suite = make_subject_suite({"mvc,1,vertices=20", "tsp,1,cities=12"});
  SurrogateAdapter adapter(suite);
  for (const char* subject : {"mvc-v20-00", "tsp-c12-00"}) {
    CheckpointFile file = run_instance(adapter, subject, 3, Millis{1500},
                                       std::string("archive-") + subject + ".ckpt");
    REQUIRE(file.records.size() > 2);
    for (std::size_t i = 1; i < file.records.size(); ++i)
      CHECK(file.records[i].score <= file.records[i - 1].score);
  }
}

TEST_CASE("a lagged instance stays silent until past its lag") {
  SubjectSuite suite = make_subject_suite({"lagged,1,lag_ms=50",
                                           "lagged,1,lag_ms=250"});
  SurrogateAdapter adapter(suite);

  // Evaluation windows of 30 and 60 ms end before the first mark after the
  // lag, so the instance leaves nothing to harvest.
  CHECK(run_instance(adapter, "lagged-00", 1, Millis{30}, "lag30.ckpt")
            .records.empty());
  CHECK(run_instance(adapter, "lagged-00", 1, Millis{60}, "lag60.ckpt")
            .records.empty());

  CheckpointFile at_150 =
      run_instance(adapter, "lagged-00", 1, Millis{150}, "lag150.ckpt");
  REQUIRE(at_150.records.size() == 1);
  CHECK(at_150.records[0].elapsed == Millis{100});

  // A 250 ms lag skips the 100 and 200 ms marks entirely; nothing may appear
  // at the lag itself, only at the next mark.
  CheckpointFile late =
      run_instance(adapter, "lagged-01", 1, Millis{400}, "lag250.ckpt");
  REQUIRE(late.records.size() == 2);
  CHECK(late.records[0].elapsed == Millis{300});
  CHECK(late.records[1].elapsed == Millis{400});
}

TEST_CASE("lagged coverage unlocks children only after their parent") {
  SubjectSuite suite = make_subject_suite({"lagged,1,targets=15,cover=1"});
  SurrogateAdapter adapter(suite);
  // cover=1 covers every reachable target per step: 1, then 2, then 4...
  // step cost 2 ms means the 100 ms mark has seen 50 steps, enough for all
  // 15 targets; the score is targets - covered.
  CheckpointFile file =
      run_instance(adapter, "lagged-00", 9, Millis{100}, "tree.ckpt");
  REQUIRE(file.records.size() == 1);
  CHECK(file.records[0].score == 0.0);
}

TEST_CASE("faulty seeds die early with exactly one error record") {
  SubjectSuite suite = make_subject_suite({"fault,1,rate=1", "fault,1,rate=0"});
  SurrogateAdapter adapter(suite);

  fs::path path = scratch_dir() / "fault.ckpt";
  auto handle = adapter.spawn("fault-00", 11, Millis{2000}, path);
  CHECK(handle->await() == InstanceHandle::State::Faulted);
  CheckpointFile file = read_checkpoint_file(path);
  REQUIRE(!file.records.empty());
  CHECK(file.records.back().error_count == 1);
  CHECK(file.records.back().elapsed <= Millis{40});

  InstanceReport report = adapter.harvest(*handle, Millis{2000});
  CHECK(report.errored);
  CHECK_FALSE(report.eligible());

  auto clean = adapter.spawn("fault-01", 11, Millis{500}, scratch_dir() / "ok.ckpt");
  CHECK(clean->await() == InstanceHandle::State::Finished);
  CHECK(adapter.harvest(*clean, Millis{500}).eligible());
}

TEST_CASE("plateau quality comes from the seed and early scores predict "
          "final ones") {
  SubjectSuite suite = make_subject_suite({"plateau,1,decay=0.005"});
  SurrogateAdapter adapter(suite);

  std::vector<double> early, final_scores;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CheckpointFile file =
        run_instance(adapter, "plateau-00", seed, Millis{2000},
                     "plateau-" + std::to_string(seed) + ".ckpt");
    REQUIRE(file.records.size() == 20);
    early.push_back(file.records.front().score);
    final_scores.push_back(file.records.back().score);
    CHECK(file.records.back().score >= 10.0);
    CHECK(file.records.back().score <= 90.1);
  }
  // The decay multiplier is shared, so the seed order at 100 ms equals the
  // order at the end; this is the regime where betting early pays off.
  for (std::size_t i = 0; i < early.size(); ++i)
    for (std::size_t j = 0; j < early.size(); ++j)
      CHECK((early[i] < early[j]) == (final_scores[i] < final_scores[j]));
}

TEST_CASE("unknown subjects and degenerate timeouts refuse to spawn") {
  SubjectSuite suite = make_subject_suite({"plateau,1"});
  SurrogateAdapter adapter(suite);
  CHECK_THROWS_AS(
      adapter.spawn("nope", 1, Millis{100}, scratch_dir() / "x.ckpt"),
      SpawnError);
  CHECK_THROWS_AS(
      adapter.spawn("plateau-00", 1, Millis{0}, scratch_dir() / "x.ckpt"),
      SpawnError);
}

TEST_CASE("reference optima by exhaustive enumeration") {
  SubjectSpec triangle;
  triangle.id = "k3";
  triangle.family = Family::Mvc;
  triangle.vertices = 3;
  triangle.edge_density = 1.0;
  CHECK(reference_optimum(triangle) == 2.0);

  SubjectSpec square;
  square.id = "sq";
  square.family = Family::Tsp;
  square.cities = 4;
  square.unit_square = true;
  CHECK(reference_optimum(square) == 4.0);

  SubjectSpec too_big = triangle;
  too_big.vertices = 21;
  CHECK_THROWS_AS(reference_optimum(too_big), SubjectTooLargeError);

  SubjectSpec many_cities = square;
  many_cities.unit_square = false;
  many_cities.cities = 11;
  CHECK_THROWS_AS(reference_optimum(many_cities), SubjectTooLargeError);

  SubjectSpec plateau;
  plateau.id = "p";
  plateau.family = Family::Plateau;
  CHECK_THROWS_AS(reference_optimum(plateau), SubjectTooLargeError);
}

TEST_CASE("pacing stretches wall time and killing cuts it short") {
  SubjectSuite suite = make_subject_suite({"plateau,1"});
  SurrogateOptions paced;
  paced.pace = 1.0;
  SurrogateAdapter adapter(suite, paced);

  auto begun = std::chrono::steady_clock::now();
  auto handle = adapter.spawn("plateau-00", 1, Millis{300},
                              scratch_dir() / "paced.ckpt");
  CHECK(handle->await() == InstanceHandle::State::Finished);
  auto wall = std::chrono::duration_cast<Millis>(
      std::chrono::steady_clock::now() - begun);
  CHECK(wall.count() >= 200);  // roughly real-time, generous lower bound

  auto victim = adapter.spawn("plateau-00", 1, Millis{20000},
                              scratch_dir() / "victim.ckpt");
  std::this_thread::sleep_for(Millis{50});
  victim->kill();
  CHECK(victim->state() == InstanceHandle::State::Killed);
}

TEST_CASE("the shared metric schema leads with the fitness score") {
  MetricSchema schema = surrogate_metric_schema();
  REQUIRE(!schema.metrics.empty());
  CHECK(schema.metrics[0].name == MetricSchema::kFitnessScore);
  CHECK(schema.metrics[0].direction == Direction::LowerIsBetter);
  CHECK(schema.direction_of("coverage") == Direction::HigherIsBetter);
}
