#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "betrun/budget.hpp"
#include "betrun/common.hpp"
#include "betrun/orchestrator.hpp"
#include "betrun/surrogates.hpp"

namespace betrun {

struct CampaignConfig {
  SubjectSuite suite;
  std::vector<RestartStrategy> strategies{RestartStrategy(1, 1.0),
                                          RestartStrategy(8, 0.05)};
  Millis t_total{2000};
  int repetitions = 30;
  int workers = 0;  // 0 picks the host core count
  std::uint64_t master_seed = 1;
  BudgetMode mode = BudgetMode::Strict;
  double eligibility_theta = 0.5;  // bad-repetition fraction above which a
                                   // subject is excluded from statistics
  SurrogateOptions surrogate;
  bool keep_checkpoints = false;
};

/// Parses `key = value` lines plus a `[subjects]` section holding suite
/// lines. Unknown keys are rejected.
CampaignConfig parse_campaign_config(const std::vector<std::string>& lines);
CampaignConfig load_campaign_config(const std::filesystem::path& path);

struct CampaignRecord {
  SubjectId subject;
  RestartStrategy strategy;
  int repetition = 0;
  RunOutcome outcome;
  std::int64_t errors = 0;  // error tally of the final instance
  Millis wall{0};  // informative only; lives in the .timing sidecar, never in
                   // the canonical record file
};

/// A repetition that cannot enter statistics: the run failed outright or its
/// final report is unusable.
bool is_bad_repetition(const CampaignRecord& record);

std::string record_to_json_line(const CampaignRecord& record);
CampaignRecord record_from_json_line(const std::string& line);

struct RecordFile {
  std::vector<CampaignRecord> records;
  bool truncated_tail = false;  // unparsable final line was dropped
};

RecordFile read_record_file(const std::filesystem::path& path);

struct CampaignResult {
  int session_records = 0;   // written by this invocation
  int total_records = 0;     // lines in the file afterwards
  int expected_records = 0;  // subjects x strategies x repetitions
  int failed_runs = 0;       // bad repetitions across the whole file
  bool completed() const { return total_records == expected_records; }
};

/// Executes every (subject, strategy, repetition) triple under a bounded
/// worker pool, appending one JSON line per record in triple order. An
/// existing record file is treated as a resume: its prefix is validated
/// against this campaign (a torn trailing line is trimmed) and only the
/// remaining triples run, so an interrupted-and-resumed file is
/// byte-identical to an uninterrupted one. `stop_after_records` (a test
/// hook) stops the session after that many newly flushed records.
CampaignResult run_campaign(const CampaignConfig& config,
                            const std::filesystem::path& records_path,
                            const std::filesystem::path& scratch_root,
                            int stop_after_records = -1);

struct EligibilityVerdict {
  SubjectId subject;
  bool eligible_baseline = true;
  bool eligible_bar = true;
  std::string reason;  // empty, BASELINE_ERRORS, BAR_ERRORS or BOTH_ERRORS

  bool eligible() const { return eligible_baseline && eligible_bar; }
};

/// The (baseline, bet-and-run) strategy pair present in the records. Throws
/// ConfigError unless there is exactly one of each.
std::pair<RestartStrategy, RestartStrategy> split_strategies(
    const std::vector<CampaignRecord>& records);

/// Judges each subject against θ: ineligible under a strategy when the
/// fraction of its repetitions that are bad exceeds θ. Expects records of
/// exactly one baseline and one bet-and-run strategy.
std::vector<EligibilityVerdict> filter_eligibility(
    const std::vector<CampaignRecord>& records, double theta);

struct ErrorTally {
  std::int64_t total_errors = 0;
  int error_runs = 0;
  int runs = 0;

  double fraction() const {
    return runs > 0 ? (double)error_runs / (double)runs : 0.0;
  }
};

/// Totals for one strategy over all its runs.
ErrorTally error_tally(const std::vector<CampaignRecord>& records,
                       const RestartStrategy& strategy);

}  // namespace betrun
