#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "betrun/adapter.hpp"

using namespace betrun;
namespace fs = std::filesystem;

namespace {

class FixedHandle : public InstanceHandle {
 public:
  FixedHandle(const fs::path& path, State state)
      : InstanceHandle("subject", 77, Millis{1000}, path), state_(state) {}

  State await() override { return state_; }
  void kill() override { state_ = State::Killed; }
  State state() const override { return state_; }

 private:
  State state_;
};

class FixedAdapter : public OptimizerAdapter {
 public:
  MetricSchema metric_schema() const override {
    return MetricSchema{{{"fitness_score", Direction::LowerIsBetter}}};
  }
  std::unique_ptr<InstanceHandle> spawn(const SubjectId&, std::uint64_t,
                                        Millis,
                                        const fs::path&) override {
    throw SpawnError("fixture adapter cannot spawn");
  }
};

fs::path fixture_file(const std::string& name, const std::string& body) {
  fs::path dir = fs::temp_directory_path() / "betrun-adapter-tests";
  fs::create_directories(dir);
  fs::path path = dir / name;
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << body;
  return path;
}

const char* kTrajectory =
    "# subject=subject seed=77 schema=fitness_score:min\n"
    "100,5,0,\n"
    "200,3,0,\n"
    "300,1,2,\n";

}  // namespace

TEST_CASE("harvest picks the last record at or before the cutoff") {
  FixedAdapter adapter;
  fs::path path = fixture_file("trajectory.ckpt", kTrajectory);
  FixedHandle handle(path, InstanceHandle::State::Finished);

  InstanceReport at_250 = adapter.harvest(handle, Millis{250});
  CHECK(at_250.produced_output);
  CHECK(at_250.score == 3.0);
  CHECK(at_250.metrics.at("fitness_score") == 3.0);

  InstanceReport at_100 = adapter.harvest(handle, Millis{100});
  CHECK(at_100.score == 5.0);

  InstanceReport full = adapter.harvest(handle, std::nullopt);
  CHECK(full.score == 1.0);
}

TEST_CASE("the error tally ignores the cutoff: a tainted seed stays tainted") {
  FixedAdapter adapter;
  fs::path path = fixture_file("tainted.ckpt", kTrajectory);
  FixedHandle handle(path, InstanceHandle::State::Finished);

  // The errors only appear at 300 ms, after this cutoff, yet the seed is
  // marked errored: elitism must never continue a seed that showed one.
  InstanceReport report = adapter.harvest(handle, Millis{250});
  CHECK(report.score == 3.0);
  CHECK(report.error_count == 2);
  CHECK(report.errored);
  CHECK_FALSE(report.eligible());
}

TEST_CASE("no record before the cutoff means no output") {
  FixedAdapter adapter;
  fs::path path = fixture_file("early-cut.ckpt", kTrajectory);
  FixedHandle handle(path, InstanceHandle::State::Finished);
  InstanceReport report = adapter.harvest(handle, Millis{50});
  CHECK_FALSE(report.produced_output);
  CHECK_FALSE(report.score.has_value());
  CHECK_FALSE(report.eligible());
}

TEST_CASE("a missing checkpoint file is no-output, not an error") {
  FixedAdapter adapter;
  fs::path dir = fs::temp_directory_path() / "betrun-adapter-tests";
  fs::create_directories(dir);
  FixedHandle handle(dir / "never-written.ckpt",
                     InstanceHandle::State::Finished);
  InstanceReport report = adapter.harvest(handle, Millis{500});
  CHECK_FALSE(report.produced_output);
  CHECK_FALSE(report.errored);
  CHECK_FALSE(report.eligible());
}

TEST_CASE("abnormal termination taints even a clean trajectory") {
  FixedAdapter adapter;
  fs::path path = fixture_file(
      "clean.ckpt",
      "# subject=subject seed=77 schema=fitness_score:min\n100,5,0,\n");

  FixedHandle finished(path, InstanceHandle::State::Finished);
  CHECK(adapter.harvest(finished, std::nullopt).eligible());

  FixedHandle faulted(path, InstanceHandle::State::Faulted);
  InstanceReport report = adapter.harvest(faulted, std::nullopt);
  CHECK(report.errored);
  CHECK(report.produced_output);  // the data is still there, just untrusted
  CHECK_FALSE(report.eligible());

  FixedHandle killed(path, InstanceHandle::State::Killed);
  CHECK(adapter.harvest(killed, std::nullopt).errored);
}

TEST_CASE("a corrupt file is an errored report, a torn tail is not") {
  FixedAdapter adapter;
  fs::path corrupt = fixture_file(
      "corrupt.ckpt",
      "# subject=subject seed=77 schema=fitness_score:min\n"
      "100,5,0,\n"
      "garbage\n"
      "300,1,0,\n");
  FixedHandle bad(corrupt, InstanceHandle::State::Finished);
  CHECK(adapter.harvest(bad, std::nullopt).errored);

  fs::path torn = fixture_file(
      "torn.ckpt",
      "# subject=subject seed=77 schema=fitness_score:min\n"
      "100,5,0,\n"
      "200,3");
  FixedHandle ok(torn, InstanceHandle::State::Finished);
  InstanceReport report = adapter.harvest(ok, std::nullopt);
  CHECK_FALSE(report.errored);
  CHECK(report.score == 5.0);
}

TEST_CASE("reports carry the handle seed") {
  FixedAdapter adapter;
  fs::path path = fixture_file("seeded.ckpt", kTrajectory);
  FixedHandle handle(path, InstanceHandle::State::Finished);
  CHECK(adapter.harvest(handle, std::nullopt).seed == 77);
}
