#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "betrun/checkpoint.hpp"
#include "betrun/common.hpp"

namespace betrun {

struct RankSumResult {
  double statistic = 0.0;  // rank sum of the first sample, mid-ranks for ties
  double p_value = 1.0;    // two-sided
  bool exact = false;      // permutation distribution vs normal approximation
};

/// Wilcoxon rank-sum test. Exact conditional permutation distribution for
/// pooled sizes up to 12, otherwise the normal approximation with
/// tie-corrected variance and 0.5 continuity correction. A pool of identical
/// values has zero variance and is defined as p = 1.0. Throws ConfigError on
/// an empty sample.
RankSumResult rank_sum_test(const std::vector<double>& xs,
                            const std::vector<double>& ys);

/// Independent brute-force oracle: recursive enumeration of every assignment
/// of pooled mid-ranks. Intentionally a second implementation; tests compare
/// the fast path against it. Pools larger than 20 are refused.
double rank_sum_exact_oracle(const std::vector<double>& xs,
                             const std::vector<double>& ys);

enum class ComparisonDirection { Equal, BarWorse, BarBetter };

std::string to_string(ComparisonDirection direction);
ComparisonDirection comparison_direction_from_string(const std::string& s);

/// Per-repetition final values of one metric on one subject, both sides.
struct SampleSet {
  std::string metric;
  Direction direction = Direction::LowerIsBetter;
  std::vector<double> baseline;
  std::vector<double> bar;
};

struct ComparisonRecord {
  SubjectId subject;
  std::string metric;
  double p_value = 1.0;
  ComparisonDirection direction = ComparisonDirection::Equal;
  bool significant = false;
};

/// Labels one sample set: EQUAL exactly when the two mean ranks coincide,
/// otherwise the mean-rank order oriented by the metric direction (for a
/// lower-is-better metric, a lower bar mean rank is BAR_BETTER).
ComparisonRecord classify(const SampleSet& sample, double alpha = 0.05);

struct AggregateRow {
  std::string metric;
  int equal = 0;
  int equal_significant = 0;  // every EQUAL is bracketed as significant
  int worse = 0;
  int worse_significant = 0;
  int better = 0;
  int better_significant = 0;
};

struct AggregateTable {
  std::vector<AggregateRow> rows;  // metric first-appearance order
};

AggregateTable aggregate(const std::vector<ComparisonRecord>& records);

/// Canonical cell sequence of one row, e.g. "28 (28) 19 (2) 43 (4)".
std::string render_row_counts(const AggregateRow& row);

/// Aligned text table; each data row contains render_row_counts verbatim.
std::string render_aggregate_table(const AggregateTable& table);

struct StabilityResult {
  double p_value = 1.0;
  std::int64_t baseline_total = 0;
  std::int64_t bar_total = 0;
};

/// Rank-sum over per-subject error counts plus the side totals. Throws
/// ConfigError when the vectors differ in length.
StabilityResult stability_test(const std::vector<std::int64_t>& baseline_errors,
                               const std::vector<std::int64_t>& bar_errors);

struct SignificantEntry {
  std::string metric;
  SubjectId subject;
  ComparisonDirection direction = ComparisonDirection::BarBetter;
  double p_value = 0.0;
};

/// Significant non-EQUAL records, grouped by metric in first-appearance
/// order.
std::vector<SignificantEntry> significant_class_report(
    const std::vector<ComparisonRecord>& records);

std::string render_significant_report(const std::vector<SignificantEntry>& entries);

}  // namespace betrun
