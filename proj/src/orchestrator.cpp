#include "betrun/orchestrator.hpp"

#include <memory>

namespace betrun {
namespace {

InstanceReport spawn_failure_report(int index, std::uint64_t seed) {
  InstanceReport report;
  report.index = index;
  report.seed = seed;
  report.errored = true;
  return report;
}

}  // namespace

std::string to_string(RunFailure failure) {
  switch (failure) {
    case RunFailure::None:              return "NONE";
    case RunFailure::NoViableCandidate: return "NO_VIABLE_CANDIDATE";
    case RunFailure::SurvivorErrored:   return "SURVIVOR_ERRORED";
  }
  return "NONE";
}

RunFailure run_failure_from_string(const std::string& s) {
  if (s == "NONE") return RunFailure::None;
  if (s == "NO_VIABLE_CANDIDATE") return RunFailure::NoViableCandidate;
  if (s == "SURVIVOR_ERRORED") return RunFailure::SurvivorErrored;
  throw ConfigError("unknown run failure: " + s);
}

std::optional<int> select_survivor(const std::vector<InstanceReport>& starters) {
  std::optional<int> best;
  for (std::size_t i = 0; i < starters.size(); ++i) {
    if (!starters[i].eligible()) continue;
    if (!best || *starters[i].score < *starters[*best].score) best = (int)i;
  }
  return best;
}

RunOutcome run_bet_and_run(const SubjectId& subject,
                           const RestartStrategy& strategy, Millis t_total,
                           BudgetMode mode, OptimizerAdapter& adapter,
                           const SeedSource& seeds, int repetition,
                           const std::filesystem::path& scratch_dir) {
  RunOutcome outcome;
  outcome.strategy = strategy;
  outcome.plan = plan_budget(strategy, t_total);
  outcome.mode = mode;

  std::filesystem::create_directories(scratch_dir);

  // Phase (i): launch all n starters concurrently with timeout t_k.
  std::vector<std::unique_ptr<InstanceHandle>> handles(strategy.n);
  std::vector<std::uint64_t> slot_seeds(strategy.n);
  for (int slot = 0; slot < strategy.n; ++slot) {
    slot_seeds[slot] = seeds.instance_seed(subject, repetition, slot);
    auto path = scratch_dir / ("slot" + std::to_string(slot) + ".ckpt");
    try {
      handles[slot] = adapter.spawn(subject, slot_seeds[slot],
                                    outcome.plan.t_k, path);
    } catch (const SpawnError&) {
      handles[slot] = nullptr;
    }
  }

  // Phase (ii): evaluate everything at the fixed time t_k.
  for (int slot = 0; slot < strategy.n; ++slot) {
    InstanceReport report =
        handles[slot] ? adapter.harvest(*handles[slot], outcome.plan.t_k)
                      : spawn_failure_report(slot, slot_seeds[slot]);
    report.index = slot;
    report.seed = slot_seeds[slot];
    outcome.starters.push_back(std::move(report));
  }
  handles.clear();
  outcome.charged_budget = Millis{(std::int64_t)strategy.n *
                                  outcome.plan.t_k.count()};

  // The baseline is a plain single run: no elitism, no restart.
  if (strategy.is_baseline()) {
    outcome.final_report = outcome.starters[0];
    if (outcome.starters[0].eligible()) {
      outcome.survivor_index = 0;
    } else {
      outcome.failure = RunFailure::NoViableCandidate;
    }
    return outcome;
  }

  // Phase (iii): elitism.
  outcome.survivor_index = select_survivor(outcome.starters);
  if (!outcome.survivor_index) {
    outcome.failure = RunFailure::NoViableCandidate;
    return outcome;
  }

  // Phase (iv): full restart of the survivor with its original seed.
  Millis run_timeout = survivor_timeout(outcome.plan, mode);
  if (run_timeout.count() == 0) {
    // Nothing left to run (n * t_k consumed the budget in strict mode); the
    // survivor's evaluation report stands as the final result.
    outcome.final_report = outcome.starters[*outcome.survivor_index];
    return outcome;
  }

  const int survivor = *outcome.survivor_index;
  InstanceReport final_report;
  try {
    auto handle = adapter.spawn(subject, slot_seeds[survivor], run_timeout,
                                scratch_dir / "final.ckpt");
    final_report = adapter.harvest(*handle, std::nullopt);
  } catch (const SpawnError&) {
    final_report = spawn_failure_report(survivor, slot_seeds[survivor]);
  }
  final_report.index = survivor;
  final_report.seed = slot_seeds[survivor];
  outcome.survivor_ran = true;
  outcome.charged_budget += run_timeout;
  if (final_report.errored) outcome.failure = RunFailure::SurvivorErrored;
  outcome.final_report = std::move(final_report);
  return outcome;
}

std::string to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::StartPhase: return "START_PHASE";
    case PhaseKind::Evaluation: return "EVALUATION";
    case PhaseKind::Elitism:    return "ELITISM";
    case PhaseKind::RunPhase:   return "RUN_PHASE";
  }
  return "UNKNOWN";
}

std::vector<PhaseEvent> phase_log(const RunOutcome& outcome) {
  std::vector<PhaseEvent> events;
  events.push_back({PhaseKind::StartPhase, Millis{0}, std::nullopt, Millis{0}});
  events.push_back(
      {PhaseKind::Evaluation, outcome.plan.t_k, std::nullopt, Millis{0}});
  if (outcome.strategy.is_baseline()) return events;

  Millis racing{(std::int64_t)outcome.strategy.n * outcome.plan.t_k.count()};
  events.push_back(
      {PhaseKind::Elitism, racing, outcome.survivor_index, Millis{0}});
  if (outcome.survivor_ran) {
    events.push_back({PhaseKind::RunPhase, racing, outcome.survivor_index,
                      survivor_timeout(outcome.plan, outcome.mode)});
  }
  return events;
}

}  // namespace betrun
