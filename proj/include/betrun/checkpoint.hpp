#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "betrun/common.hpp"

namespace betrun {

enum class Direction { LowerIsBetter, HigherIsBetter };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct MetricSpec {
  std::string name;
  Direction direction = Direction::LowerIsBetter;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

/// Ordered metric declaration. Every adapter schema carries the
/// distinguished "fitness_score" metric (lower is better) first.
struct MetricSchema {
  static constexpr const char* kFitnessScore = "fitness_score";

  std::vector<MetricSpec> metrics;

  bool contains(const std::string& name) const;
  std::optional<Direction> direction_of(const std::string& name) const;

  friend bool operator==(const MetricSchema&, const MetricSchema&) = default;
};

/// One line of a checkpoint file: the best-so-far state of an instance at a
/// given amount of work time.
struct CheckpointRecord {
  Millis elapsed{0};
  double score = 0.0;
  std::int64_t error_count = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct CheckpointHeader {
  SubjectId subject;
  std::uint64_t seed = 0;
  MetricSchema schema;
};

/// Stable text form for reals shared by every file format (12 significant
/// digits, C locale, 7-bit safe).
std::string format_real(double value);

std::string format_checkpoint_header(const CheckpointHeader& header);
std::string format_checkpoint_record(const CheckpointRecord& record);

/// Line-buffered appender. One writer per file; every record is flushed so
/// a killed instance leaves at most one truncated trailing line.
class CheckpointWriter {
 public:
  CheckpointWriter(const std::filesystem::path& path,
                   const CheckpointHeader& header);

  void append(const CheckpointRecord& record);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct CheckpointFile {
  std::optional<CheckpointHeader> header;
  std::vector<CheckpointRecord> records;
  bool dropped_trailing = false;  // unparsable final line was ignored
  bool corrupt = false;           // malformed line before the end
};

/// Parses a checkpoint file. A missing or empty file parses to zero records.
/// An unparsable trailing line is dropped; an unparsable interior line marks
/// the file corrupt (surfaces as an errored report upstream).
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

}  // namespace betrun
