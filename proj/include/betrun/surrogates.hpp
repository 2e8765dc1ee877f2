#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "betrun/adapter.hpp"
#include "betrun/common.hpp"

namespace betrun {

enum class Family { Mvc, Tsp, Plateau, Lagged, Fault };

std::string to_string(Family family);

/// Flat description of one surrogate subject. Which parameter group applies
/// depends on the family; the suite parser fills the rest with defaults.
struct SubjectSpec {
  SubjectId id;
  Family family = Family::Plateau;
  std::uint64_t structure_seed = 0;  // derived from id; fixes the instance data

  // mvc: random graph + genetic algorithm knobs
  int vertices = 20;
  double edge_density = 0.3;
  int population = 20;
  double mutation_rate = 0.05;
  int elites = 2;

  // tsp: 2-opt with internal random restarts
  int cities = 10;
  bool unit_square = false;  // fixed 4-corner layout instead of random cities

  // plateau + fault decay core: f(t) = q(seed) + (100 - q(seed)) * exp(-r t)
  double decay_rate = 0.005;  // per millisecond of work

  // lagged coverage
  int targets = 40;
  Millis lag{0};
  double cover_prob = 0.4;

  // fault injection
  double fault_rate = 0.18;

  Micros step_cost{2000};  // virtual work per optimizer step
};

struct SubjectSuite {
  std::vector<SubjectSpec> subjects;

  const SubjectSpec* find(const SubjectId& id) const;
  std::vector<SubjectId> ids() const;
};

/// Builds a suite from `family,count,param=value,...` lines. A value may be
/// a colon-separated list, cycled across the line's count so one line can
/// span sizes (e.g. `mvc,6,vertices=10:14:18:24:32:40`). Blank lines and
/// `#` comments are ignored. Throws ConfigError on invalid input.
SubjectSuite make_subject_suite(const std::vector<std::string>& lines);
SubjectSuite load_subject_suite(const std::filesystem::path& path);

/// One seeded optimizer run over virtual work time. initialize() reports the
/// startup lag before any output may exist; each step costs step_cost() of
/// work. Best-so-far never worsens.
class AnytimeProcess {
 public:
  virtual ~AnytimeProcess() = default;
  virtual Micros initialize() = 0;
  virtual Micros step_cost() const = 0;
  virtual void step() = 0;
  virtual double best_score() const = 0;
  virtual std::vector<std::pair<std::string, double>> metrics() const = 0;

  /// Virtual time at which this instance faults and dies, if drawn faulty.
  virtual std::optional<Micros> fault_at() const { return std::nullopt; }
};

std::unique_ptr<AnytimeProcess> make_process(const SubjectSpec& spec,
                                             std::uint64_t seed);

/// Metric vector shared by all surrogate families.
MetricSchema surrogate_metric_schema();

/// Exact optimal fitness by exhaustive enumeration; the test oracle for the
/// search families. Throws SubjectTooLargeError beyond 20 vertices / 10
/// cities or for families with no enumerable optimum.
double reference_optimum(const SubjectSpec& spec);

struct SurrogateOptions {
  Millis checkpoint_interval{100};
  Millis grace{250};  // wall-clock slack past the paced deadline before a kill
  // Wall milliseconds per millisecond of virtual work. 0 runs turbo: results
  // are identical, only wall-clock timing disappears.
  double pace = 0.0;
};

/// In-process adapter over the surrogate families. Each spawned instance is
/// a driver thread that advances a deterministic virtual clock and writes
/// mark-aligned checkpoint records; (subject, seed) fixes the stream
/// byte-for-byte.
class SurrogateAdapter : public OptimizerAdapter {
 public:
  explicit SurrogateAdapter(SubjectSuite suite, SurrogateOptions options = {});

  MetricSchema metric_schema() const override;
  std::unique_ptr<InstanceHandle> spawn(
      const SubjectId& subject, std::uint64_t seed, Millis timeout,
      const std::filesystem::path& checkpoint_path) override;

  const SubjectSuite& suite() const { return suite_; }
  const SurrogateOptions& options() const { return options_; }

 private:
  SubjectSuite suite_;
  SurrogateOptions options_;
};

}  // namespace betrun
