#include "betrun/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>

namespace betrun {
namespace {

// Pooled mid-ranks doubled so everything stays in exact integers: an element
// with mid-rank 2.5 carries half-rank 5.
struct PooledRanks {
  std::vector<std::int64_t> half_ranks;  // pool order: xs first, then ys
  std::int64_t w2_x = 0;                 // doubled rank sum of xs
  std::int64_t w2_y = 0;
  std::int64_t tie_cubes = 0;            // sum of t^3 - t over tie groups
  int n1 = 0;
  int n2 = 0;
};

PooledRanks pooled_ranks(const std::vector<double>& xs,
                         const std::vector<double>& ys) {
  if (xs.empty() || ys.empty())
    throw ConfigError("rank-sum test needs non-empty samples");
  PooledRanks ranks;
  ranks.n1 = (int)xs.size();
  ranks.n2 = (int)ys.size();
  const int total = ranks.n1 + ranks.n2;

  std::vector<std::pair<double, int>> pool;  // (value, pool index)
  pool.reserve(total);
  for (int i = 0; i < ranks.n1; ++i) pool.emplace_back(xs[i], i);
  for (int i = 0; i < ranks.n2; ++i) pool.emplace_back(ys[i], ranks.n1 + i);
  std::sort(pool.begin(), pool.end());

  ranks.half_ranks.assign(total, 0);
  int i = 0;
  while (i < total) {
    int j = i;
    while (j + 1 < total && pool[j + 1].first == pool[i].first) ++j;
    // 1-based ranks i+1 .. j+1 share mid-rank (i + j + 2) / 2
    std::int64_t half = i + j + 2;
    for (int k = i; k <= j; ++k) ranks.half_ranks[pool[k].second] = half;
    std::int64_t t = j - i + 1;
    ranks.tie_cubes += t * t * t - t;
    i = j + 1;
  }
  for (int k = 0; k < ranks.n1; ++k) ranks.w2_x += ranks.half_ranks[k];
  for (int k = ranks.n1; k < total; ++k) ranks.w2_y += ranks.half_ranks[k];
  return ranks;
}

double exact_two_sided_p(const PooledRanks& ranks) {
  const int total = ranks.n1 + ranks.n2;
  const std::int64_t mu2 = (std::int64_t)ranks.n1 * (total + 1);
  const std::int64_t observed = std::llabs(ranks.w2_x - mu2);

  std::int64_t assignments = 0;
  std::int64_t at_least_as_extreme = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (std::popcount(mask) != ranks.n1) continue;
    std::int64_t w2 = 0;
    for (int k = 0; k < total; ++k)
      if (mask >> k & 1u) w2 += ranks.half_ranks[k];
    ++assignments;
    if (std::llabs(w2 - mu2) >= observed) ++at_least_as_extreme;
  }
  return (double)at_least_as_extreme / (double)assignments;
}

double normal_two_sided_p(const PooledRanks& ranks) {
  const double n1 = ranks.n1, n2 = ranks.n2;
  const double total = n1 + n2;
  const double w = (double)ranks.w2_x / 2.0;
  const double mu = n1 * (total + 1.0) / 2.0;
  double variance =
      n1 * n2 / 12.0 *
      ((total + 1.0) - (double)ranks.tie_cubes / (total * (total - 1.0)));
  if (variance <= 1e-12) return 1.0;  // every pooled value identical
  double z = (std::fabs(w - mu) - 0.5) / std::sqrt(variance);
  if (z < 0.0) z = 0.0;
  return std::erfc(z / std::sqrt(2.0));
}

}  // namespace

RankSumResult rank_sum_test(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  PooledRanks ranks = pooled_ranks(xs, ys);
  RankSumResult result;
  result.statistic = (double)ranks.w2_x / 2.0;
  result.exact = ranks.n1 + ranks.n2 <= 12;
  result.p_value = result.exact ? exact_two_sided_p(ranks)
                                : normal_two_sided_p(ranks);
  return result;
}

double rank_sum_exact_oracle(const std::vector<double>& xs,
                             const std::vector<double>& ys) {
  if (xs.empty() || ys.empty())
    throw ConfigError("rank-sum oracle needs non-empty samples");
  const int n1 = (int)xs.size();
  const int total = n1 + (int)ys.size();
  if (total > 20) throw ConfigError("rank-sum oracle capped at 20 pooled values");

  std::vector<double> pool(xs);
  pool.insert(pool.end(), ys.begin(), ys.end());
  // Definitional mid-rank: #smaller + (#equal + 1) / 2. Quadratic on
  // purpose; this is the slow second route the fast path is checked against.
  auto rank_of = [&](double v) {
    int smaller = 0, equal = 0;
    for (double u : pool) {
      if (u < v) ++smaller;
      if (u == v) ++equal;
    }
    return (double)smaller + ((double)equal + 1.0) / 2.0;
  };
  std::vector<double> rank(total);
  for (int i = 0; i < total; ++i) rank[i] = rank_of(pool[i]);

  double w_observed = 0.0;
  for (int i = 0; i < n1; ++i) w_observed += rank[i];
  const double mu = (double)n1 * (total + 1) / 2.0;
  const double d_observed = std::fabs(w_observed - mu);

  // Mid-ranks are multiples of 1/2, so these double comparisons are exact.
  std::int64_t assignments = 0, extreme = 0;
  auto recurse = [&](auto&& self, int from, int left, double acc) -> void {
    if (left == 0) {
      ++assignments;
      if (std::fabs(acc - mu) >= d_observed) ++extreme;
      return;
    }
    if (total - from < left) return;
    self(self, from + 1, left - 1, acc + rank[from]);
    self(self, from + 1, left, acc);
  };
  recurse(recurse, 0, n1, 0.0);
  return (double)extreme / (double)assignments;
}

std::string to_string(ComparisonDirection direction) {
  switch (direction) {
    case ComparisonDirection::Equal:     return "EQUAL";
    case ComparisonDirection::BarWorse:  return "BAR_WORSE";
    case ComparisonDirection::BarBetter: return "BAR_BETTER";
  }
  return "EQUAL";
}

ComparisonDirection comparison_direction_from_string(const std::string& s) {
  if (s == "EQUAL") return ComparisonDirection::Equal;
  if (s == "BAR_WORSE") return ComparisonDirection::BarWorse;
  if (s == "BAR_BETTER") return ComparisonDirection::BarBetter;
  throw ConfigError("unknown comparison direction: " + s);
}

ComparisonRecord classify(const SampleSet& sample, double alpha) {
  RankSumResult test = rank_sum_test(sample.baseline, sample.bar);
  PooledRanks ranks = pooled_ranks(sample.baseline, sample.bar);

  ComparisonRecord record;
  record.metric = sample.metric;
  record.p_value = test.p_value;

  // Mean-rank comparison by cross-multiplication keeps this exact:
  // w2_x / n1 vs w2_y / n2.
  std::int64_t lhs = ranks.w2_y * ranks.n1;  // bar side scaled
  std::int64_t rhs = ranks.w2_x * ranks.n2;  // baseline side scaled
  if (lhs == rhs) {
    record.direction = ComparisonDirection::Equal;
  } else {
    bool bar_values_lower = lhs < rhs;
    bool bar_better = sample.direction == Direction::LowerIsBetter
                          ? bar_values_lower
                          : !bar_values_lower;
    record.direction = bar_better ? ComparisonDirection::BarBetter
                                  : ComparisonDirection::BarWorse;
  }
  record.significant = record.p_value < alpha;
  return record;
}

AggregateTable aggregate(const std::vector<ComparisonRecord>& records) {
  AggregateTable table;
  auto row_for = [&](const std::string& metric) -> AggregateRow& {
    for (AggregateRow& row : table.rows)
      if (row.metric == metric) return row;
    table.rows.push_back(AggregateRow{metric, 0, 0, 0, 0, 0, 0});
    return table.rows.back();
  };
  for (const ComparisonRecord& record : records) {
    AggregateRow& row = row_for(record.metric);
    switch (record.direction) {
      case ComparisonDirection::Equal:
        ++row.equal;
        ++row.equal_significant;  // statistically-the-same is bracketed whole
        break;
      case ComparisonDirection::BarWorse:
        ++row.worse;
        if (record.significant) ++row.worse_significant;
        break;
      case ComparisonDirection::BarBetter:
        ++row.better;
        if (record.significant) ++row.better_significant;
        break;
    }
  }
  return table;
}

std::string render_row_counts(const AggregateRow& row) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d (%d) %d (%d) %d (%d)", row.equal,
                row.equal_significant, row.worse, row.worse_significant,
                row.better, row.better_significant);
  return buf;
}

std::string render_aggregate_table(const AggregateTable& table) {
  std::size_t name_width = std::string("Metric").size();
  for (const AggregateRow& row : table.rows)
    name_width = std::max(name_width, row.metric.size());

  std::string out = "Metric";
  out.append(name_width - 6 + 2, ' ');
  out += "BAR = BL | BAR < BL | BAR > BL\n";
  for (const AggregateRow& row : table.rows) {
    out += row.metric;
    out.append(name_width - row.metric.size() + 2, ' ');
    out += render_row_counts(row);
    out += '\n';
  }
  return out;
}

StabilityResult stability_test(const std::vector<std::int64_t>& baseline_errors,
                               const std::vector<std::int64_t>& bar_errors) {
  if (baseline_errors.size() != bar_errors.size())
    throw ConfigError("stability test needs equal-length per-subject vectors");
  StabilityResult result;
  std::vector<double> xs, ys;
  for (std::int64_t e : baseline_errors) {
    result.baseline_total += e;
    xs.push_back((double)e);
  }
  for (std::int64_t e : bar_errors) {
    result.bar_total += e;
    ys.push_back((double)e);
  }
  result.p_value = rank_sum_test(xs, ys).p_value;
  return result;
}

std::vector<SignificantEntry> significant_class_report(
    const std::vector<ComparisonRecord>& records) {
  std::vector<std::string> metric_order;
  std::map<std::string, std::vector<SignificantEntry>> by_metric;
  for (const ComparisonRecord& record : records) {
    if (!record.significant || record.direction == ComparisonDirection::Equal)
      continue;
    if (!by_metric.count(record.metric)) metric_order.push_back(record.metric);
    by_metric[record.metric].push_back(SignificantEntry{
        record.metric, record.subject, record.direction, record.p_value});
  }
  std::vector<SignificantEntry> entries;
  for (const std::string& metric : metric_order)
    for (SignificantEntry& entry : by_metric[metric])
      entries.push_back(std::move(entry));
  return entries;
}

std::string render_significant_report(
    const std::vector<SignificantEntry>& entries) {
  if (entries.empty()) return "no significant per-subject differences\n";
  std::string out;
  for (const SignificantEntry& entry : entries) {
    out += entry.metric + "  " + entry.subject + "  " +
           to_string(entry.direction) + "  p=" + format_real(entry.p_value) +
           "\n";
  }
  return out;
}

}  // namespace betrun
