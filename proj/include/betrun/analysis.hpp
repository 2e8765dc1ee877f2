#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "betrun/campaign.hpp"
#include "betrun/stats.hpp"
#include "betrun/surrogates.hpp"

namespace betrun {

struct AnalysisOptions {
  double alpha = 0.05;
  double theta = 0.5;
  MetricSchema schema = surrogate_metric_schema();
};

struct AnalysisResult {
  RestartStrategy baseline;
  RestartStrategy bar;
  double alpha = 0.05;
  double theta = 0.5;
  int subject_count = 0;    // subjects that entered the analysis
  int eligible_count = 0;   // of those, eligible under both strategies
  int dropped_subjects = 0; // present under only one strategy (interrupted run)
  bool truncated_input = false;
  std::vector<EligibilityVerdict> verdicts;
  std::vector<ComparisonRecord> comparisons;  // eligible subjects x metrics
  StabilityResult stability;  // over per-subject error counts, all subjects
  ErrorTally baseline_tally;
  ErrorTally bar_tally;
};

struct LoadedRecords {
  std::vector<CampaignRecord> records;
  bool truncated = false;
  int dropped_subjects = 0;  // outside the two-file subject intersection
};

/// One combined record file, or a baseline file plus a bet-and-run file.
/// Two-file mode checks the sides' roles, requires matching metric schemas,
/// and restricts both to their common subjects (disjoint sets are an error).
LoadedRecords load_records_for_analysis(
    const std::filesystem::path& first,
    const std::optional<std::filesystem::path>& second);

/// Runs eligibility filtering and every per-subject per-metric test.
/// Subjects with records under only one strategy are dropped (with a count),
/// so interrupted campaigns analyze their complete part.
AnalysisResult analyze_records(const std::vector<CampaignRecord>& records,
                               const AnalysisOptions& options,
                               bool truncated_input = false);

/// Machine-readable line-delimited form, one JSON object per line tagged
/// with a "kind" field. Byte-deterministic for a given result.
void write_analysis(const AnalysisResult& result,
                    const std::filesystem::path& path);
AnalysisResult read_analysis(const std::filesystem::path& path);

/// Human-readable report: aggregate table, significant classes, stability
/// test and error tallies.
std::string render_report(const AnalysisResult& result);

}  // namespace betrun
