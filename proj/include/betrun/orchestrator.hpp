#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "betrun/adapter.hpp"
#include "betrun/budget.hpp"
#include "betrun/common.hpp"
#include "betrun/rng.hpp"

namespace betrun {

enum class RunFailure {
  None,
  NoViableCandidate,  // no starter survived the evaluation phase
  SurvivorErrored,    // the restarted survivor errored during its run phase
};

std::string to_string(RunFailure failure);
RunFailure run_failure_from_string(const std::string& s);

/// Result of one full bet-and-run execution.
struct RunOutcome {
  RestartStrategy strategy;
  BudgetPlan plan;
  BudgetMode mode = BudgetMode::Strict;
  std::vector<InstanceReport> starters;  // length n, slot order
  std::optional<int> survivor_index;
  std::optional<InstanceReport> final_report;
  RunFailure failure = RunFailure::None;
  Millis charged_budget{0};
  bool survivor_ran = false;  // the survivor was actually restarted
};

/// Elitism: smallest index among eligible reports achieving the minimum
/// score (lower is better); NONE when nothing is eligible. Ties keep the
/// first candidate.
std::optional<int> select_survivor(const std::vector<InstanceReport>& starters);

/// Executes the four phases against a black-box adapter: start n seeded
/// instances with timeout t_k, harvest them at t_k, keep the elite, restart
/// it from scratch (same seed) for the survivor timeout. The baseline
/// (n = 1, p = 1) skips elitism and the run phase; its starter's harvest is
/// the final report. Spawn errors become errored reports, never exceptions.
RunOutcome run_bet_and_run(const SubjectId& subject,
                           const RestartStrategy& strategy, Millis t_total,
                           BudgetMode mode, OptimizerAdapter& adapter,
                           const SeedSource& seeds, int repetition,
                           const std::filesystem::path& scratch_dir);

enum class PhaseKind { StartPhase, Evaluation, Elitism, RunPhase };

std::string to_string(PhaseKind kind);

struct PhaseEvent {
  PhaseKind kind;
  Millis at{0};  // position on the charged-budget timeline
  std::optional<int> survivor;  // Elitism only
  Millis timeout{0};            // RunPhase only
};

/// Timestamped audit trail of an outcome. Baseline outcomes carry only the
/// start and evaluation events; a run-phase event appears only when the
/// survivor was actually restarted.
std::vector<PhaseEvent> phase_log(const RunOutcome& outcome);

}  // namespace betrun
