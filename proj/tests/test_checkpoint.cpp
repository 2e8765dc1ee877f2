#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "betrun/checkpoint.hpp"

using namespace betrun;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "betrun-checkpoint-tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
}

CheckpointHeader sample_header() {
  CheckpointHeader header;
  header.subject = "mvc-v10-00";
  header.seed = 987654321;
  header.schema.metrics = {{"fitness_score", Direction::LowerIsBetter},
                           {"coverage", Direction::HigherIsBetter}};
  return header;
}

}  // namespace

TEST_CASE("format_real emits minimal stable decimals") {
  CHECK(format_real(4.0) == "4");
  CHECK(format_real(0.05) == "0.05");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-2.5) == "-2.5");
}

TEST_CASE("records and headers survive a write-read round trip") {
  fs::path path = temp_file("roundtrip.ckpt");
  CheckpointHeader header = sample_header();
  {
    CheckpointWriter writer(path, header);
    writer.append({Millis{100}, 12.5, 0, {{"coverage", 0.25}}});
    writer.append({Millis{200}, 7.0, 1, {{"coverage", 0.5}}});
  }
  CheckpointFile file = read_checkpoint_file(path);
  REQUIRE(file.header.has_value());
  CHECK(file.header->subject == "mvc-v10-00");
  CHECK(file.header->seed == 987654321);
  CHECK(file.header->schema == header.schema);
  REQUIRE(file.records.size() == 2);
  CHECK(file.records[0].elapsed == Millis{100});
  CHECK(file.records[0].score == 12.5);
  CHECK(file.records[0].error_count == 0);
  REQUIRE(file.records[0].metrics.size() == 1);
  CHECK(file.records[0].metrics[0].first == "coverage");
  CHECK(file.records[0].metrics[0].second == 0.25);
  CHECK(file.records[1].error_count == 1);
  CHECK_FALSE(file.dropped_trailing);
  CHECK_FALSE(file.corrupt);
}

TEST_CASE("every append is flushed so records survive a hard kill") {
  fs::path path = temp_file("flushed.ckpt");
  CheckpointWriter writer(path, sample_header());
  writer.append({Millis{100}, 1.0, 0, {}});
  // Read while the writer is still alive, as the harvester would after a
  // kill.
  CheckpointFile file = read_checkpoint_file(path);
  CHECK(file.records.size() == 1);
}

TEST_CASE("a missing file parses to zero records without error") {
  CheckpointFile file = read_checkpoint_file(temp_file("does-not-exist.ckpt"));
  CHECK(file.records.empty());
  CHECK_FALSE(file.corrupt);
  CHECK_FALSE(file.header.has_value());
}

TEST_CASE("a torn trailing line is dropped, not fatal") {
  fs::path path = temp_file("torn.ckpt");
  write_text(path,
             "# subject=s seed=1 schema=fitness_score:min\n"
             "100,5,0,\n"
             "200,3");  // no newline, cut mid-record
  CheckpointFile file = read_checkpoint_file(path);
  CHECK(file.dropped_trailing);
  CHECK_FALSE(file.corrupt);
  REQUIRE(file.records.size() == 1);
  CHECK(file.records[0].score == 5.0);
}

TEST_CASE("garbage before the end marks the file corrupt") {
  fs::path path = temp_file("corrupt.ckpt");
  write_text(path,
             "# subject=s seed=1 schema=fitness_score:min\n"
             "100,5,0,\n"
             "this is not a record\n"
             "300,1,0,\n");
  CheckpointFile file = read_checkpoint_file(path);
  CHECK(file.corrupt);
}

TEST_CASE("negative elapsed or error counts are rejected") {
  fs::path path = temp_file("negative.ckpt");
  write_text(path,
             "# subject=s seed=1 schema=fitness_score:min\n"
             "-100,5,0,\n");
  CHECK(read_checkpoint_file(path).records.empty());

  write_text(path,
             "# subject=s seed=1 schema=fitness_score:min\n"
             "100,5,-1,\n");
  CheckpointFile file = read_checkpoint_file(path);
  CHECK(file.records.empty());
}

TEST_CASE("schema lookups respect declaration order and direction") {
  MetricSchema schema = sample_header().schema;
  CHECK(schema.contains("fitness_score"));
  CHECK(schema.contains("coverage"));
  CHECK_FALSE(schema.contains("runtime"));
  CHECK(schema.direction_of("coverage") == Direction::HigherIsBetter);
  CHECK(schema.direction_of("fitness_score") == Direction::LowerIsBetter);
  CHECK_FALSE(schema.direction_of("runtime").has_value());
  CHECK(schema.metrics[0].name == MetricSchema::kFitnessScore);
}

TEST_CASE("direction names round-trip") {
  CHECK(direction_from_string(to_string(Direction::LowerIsBetter)) ==
        Direction::LowerIsBetter);
  CHECK(direction_from_string(to_string(Direction::HigherIsBetter)) ==
        Direction::HigherIsBetter);
  CHECK_THROWS_AS(direction_from_string("sideways"), ConfigError);
}
