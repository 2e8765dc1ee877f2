#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "betrun/checkpoint.hpp"
#include "betrun/common.hpp"

namespace betrun {

/// What the evaluation phase knows about one instance after harvesting its
/// checkpoint file.
struct InstanceReport {
  int index = 0;  // 0-based slot among the n starters
  std::uint64_t seed = 0;
  std::optional<double> score;  // absent when the instance produced no output
  std::map<std::string, double> metrics;
  bool errored = false;
  bool produced_output = false;
  std::int64_t error_count = 0;

  // A candidate may survive elitism only if it produced output and never
  // showed an error.
  bool eligible() const { return produced_output && !errored; }
};

/// A running (or terminated) optimizer instance bound to one checkpoint file.
class InstanceHandle {
 public:
  enum class State {
    Running,
    Finished,  // ran until its timeout (normal termination)
    Faulted,   // terminated itself abnormally
    Killed,    // terminated from outside before finishing
  };

  InstanceHandle(SubjectId subject, std::uint64_t seed, Millis timeout,
                 std::filesystem::path checkpoint_path)
      : subject_(std::move(subject)),
        seed_(seed),
        timeout_(timeout),
        checkpoint_path_(std::move(checkpoint_path)) {}
  virtual ~InstanceHandle() = default;

  InstanceHandle(const InstanceHandle&) = delete;
  InstanceHandle& operator=(const InstanceHandle&) = delete;

  /// Blocks until the instance has terminated (enforcing its timeout) and
  /// returns the terminal state.
  virtual State await() = 0;

  /// Forcibly terminates a still-running instance. Idempotent.
  virtual void kill() = 0;

  virtual State state() const = 0;

  /// Wall-clock spent between spawn and the start of optimizer work. Kept
  /// out of checkpoint elapsed times, which measure optimizer work only.
  virtual Micros startup_wall() const { return Micros{0}; }

  const SubjectId& subject() const { return subject_; }
  std::uint64_t seed() const { return seed_; }
  Millis timeout() const { return timeout_; }
  const std::filesystem::path& checkpoint_path() const { return checkpoint_path_; }

 private:
  SubjectId subject_;
  std::uint64_t seed_ = 0;
  Millis timeout_{0};
  std::filesystem::path checkpoint_path_;
};

std::string to_string(InstanceHandle::State state);

/// Black-box contract for launching, time-limiting and harvesting an anytime
/// optimizer. Implementations own timeout enforcement; callers never trust
/// the optimizer to stop on its own.
class OptimizerAdapter {
 public:
  virtual ~OptimizerAdapter() = default;

  /// Declared metric vector; always contains "fitness_score" (lower is
  /// better) first.
  virtual MetricSchema metric_schema() const = 0;

  /// Starts one instance. Throws SpawnError for unknown subjects or
  /// resource exhaustion; callers turn that into an errored report.
  virtual std::unique_ptr<InstanceHandle> spawn(
      const SubjectId& subject, std::uint64_t seed, Millis timeout,
      const std::filesystem::path& checkpoint_path) = 0;

  /// Awaits termination and condenses the checkpoint file into a report.
  /// With a cutoff, uses the last record at or before it; otherwise the last
  /// record overall. All anomalies are encoded in the report, never thrown.
  virtual InstanceReport harvest(InstanceHandle& handle,
                                 std::optional<Millis> cutoff) const;
};

}  // namespace betrun
