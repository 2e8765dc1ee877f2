#include "betrun/adapter.hpp"

namespace betrun {

std::string to_string(InstanceHandle::State state) {
  switch (state) {
    case InstanceHandle::State::Running:  return "running";
    case InstanceHandle::State::Finished: return "finished";
    case InstanceHandle::State::Faulted:  return "faulted";
    case InstanceHandle::State::Killed:   return "killed";
  }
  return "unknown";
}

InstanceReport OptimizerAdapter::harvest(InstanceHandle& handle,
                                         std::optional<Millis> cutoff) const {
  InstanceReport report;
  report.seed = handle.seed();

  InstanceHandle::State state = handle.await();
  CheckpointFile file = read_checkpoint_file(handle.checkpoint_path());

  const CheckpointRecord* chosen = nullptr;
  for (const CheckpointRecord& record : file.records) {
    if (cutoff && record.elapsed > *cutoff) break;  // elapsed is non-decreasing
    chosen = &record;
  }

  if (chosen) {
    report.produced_output = true;
    report.score = chosen->score;
    report.metrics[MetricSchema::kFitnessScore] = chosen->score;
    for (const auto& [name, value] : chosen->metrics)
      report.metrics[name] = value;
  }

  // The error tally covers the whole instance, not just the cutoff window:
  // a seed that showed an error is tainted no matter when it fired. Records
  // carry a running total, so the last one holds the tally.
  if (!file.records.empty())
    report.error_count = file.records.back().error_count;

  bool abnormal_exit = state == InstanceHandle::State::Faulted ||
                       state == InstanceHandle::State::Killed;
  report.errored = report.error_count > 0 || abnormal_exit || file.corrupt;
  return report;
}

}  // namespace betrun
