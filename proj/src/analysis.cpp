#include "betrun/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace betrun {
namespace {

using nlohmann::json;

std::set<std::string> metric_names(const std::vector<CampaignRecord>& records) {
  std::set<std::string> names;
  for (const CampaignRecord& record : records)
    if (record.outcome.final_report)
      for (const auto& [name, value] : record.outcome.final_report->metrics)
        names.insert(name);
  return names;
}

std::set<SubjectId> subject_set(const std::vector<CampaignRecord>& records) {
  std::set<SubjectId> subjects;
  for (const CampaignRecord& record : records) subjects.insert(record.subject);
  return subjects;
}

}  // namespace

LoadedRecords load_records_for_analysis(
    const std::filesystem::path& first,
    const std::optional<std::filesystem::path>& second) {
  LoadedRecords loaded;
  RecordFile a = read_record_file(first);
  loaded.truncated = a.truncated_tail;
  if (!second) {
    loaded.records = std::move(a.records);
    return loaded;
  }

  RecordFile b = read_record_file(*second);
  loaded.truncated = loaded.truncated || b.truncated_tail;
  for (const CampaignRecord& record : a.records)
    if (!record.strategy.is_baseline())
      throw ConfigError("first record file must hold baseline runs only");
  for (const CampaignRecord& record : b.records)
    if (record.strategy.is_baseline())
      throw ConfigError("second record file must hold bet-and-run runs only");

  if (metric_names(a.records) != metric_names(b.records))
    throw ConfigError("metric schema mismatch between record files");

  std::set<SubjectId> common;
  std::set<SubjectId> in_a = subject_set(a.records);
  std::set<SubjectId> in_b = subject_set(b.records);
  std::set_intersection(in_a.begin(), in_a.end(), in_b.begin(), in_b.end(),
                        std::inserter(common, common.begin()));
  if (common.empty())
    throw ConfigError("record files have disjoint subject sets");
  loaded.dropped_subjects =
      (int)(in_a.size() - common.size() + in_b.size() - common.size());

  for (std::vector<CampaignRecord>* side : {&a.records, &b.records})
    for (CampaignRecord& record : *side)
      if (common.count(record.subject))
        loaded.records.push_back(std::move(record));
  return loaded;
}

AnalysisResult analyze_records(const std::vector<CampaignRecord>& records,
                               const AnalysisOptions& options,
                               bool truncated_input) {
  if (options.alpha <= 0.0 || options.alpha >= 1.0)
    throw ConfigError("alpha must be in (0, 1)");
  if (options.theta < 0.0 || options.theta > 1.0)
    throw ConfigError("theta must be in [0, 1]");

  AnalysisResult result;
  result.alpha = options.alpha;
  result.theta = options.theta;
  result.truncated_input = truncated_input;
  std::tie(result.baseline, result.bar) = split_strategies(records);

  for (const std::string& name : metric_names(records))
    if (!options.schema.contains(name))
      throw ConfigError("metric not in declared schema: " + name);

  // An interrupted campaign can leave a subject with runs under only one
  // strategy; such subjects cannot be compared and are dropped.
  std::map<SubjectId, std::pair<bool, bool>> sides;
  std::vector<SubjectId> order;
  for (const CampaignRecord& record : records) {
    if (!sides.count(record.subject)) order.push_back(record.subject);
    auto& [saw_baseline, saw_bar] = sides[record.subject];
    (record.strategy.is_baseline() ? saw_baseline : saw_bar) = true;
  }
  std::vector<SubjectId> subjects;
  for (const SubjectId& subject : order) {
    if (sides[subject].first && sides[subject].second) subjects.push_back(subject);
    else ++result.dropped_subjects;
  }
  if (subjects.empty())
    throw ConfigError("no subject has runs under both strategies");

  std::vector<CampaignRecord> usable;
  for (const CampaignRecord& record : records)
    if (sides[record.subject].first && sides[record.subject].second)
      usable.push_back(record);

  result.subject_count = (int)subjects.size();
  result.verdicts = filter_eligibility(usable, options.theta);
  for (const EligibilityVerdict& verdict : result.verdicts)
    if (verdict.eligible()) ++result.eligible_count;

  result.baseline_tally = error_tally(usable, result.baseline);
  result.bar_tally = error_tally(usable, result.bar);

  // Stability: per-subject error counts across all subjects, both sides.
  std::map<SubjectId, std::pair<std::int64_t, std::int64_t>> errors_by_subject;
  for (const CampaignRecord& record : usable) {
    auto& [base_errors, bar_errors] = errors_by_subject[record.subject];
    (record.strategy.is_baseline() ? base_errors : bar_errors) += record.errors;
  }
  std::vector<std::int64_t> baseline_errors, bar_errors;
  for (const SubjectId& subject : subjects) {
    baseline_errors.push_back(errors_by_subject[subject].first);
    bar_errors.push_back(errors_by_subject[subject].second);
  }
  result.stability = stability_test(baseline_errors, bar_errors);

  // Per-subject, per-metric comparisons over eligible subjects, using the
  // final report of every usable repetition.
  std::map<SubjectId, bool> eligible;
  for (const EligibilityVerdict& verdict : result.verdicts)
    eligible[verdict.subject] = verdict.eligible();

  std::map<SubjectId, std::map<std::string, SampleSet>> samples;
  for (const CampaignRecord& record : usable) {
    if (!eligible[record.subject] || is_bad_repetition(record)) continue;
    for (const auto& [name, value] : record.outcome.final_report->metrics) {
      SampleSet& sample = samples[record.subject][name];
      sample.metric = name;
      sample.direction = *options.schema.direction_of(name);
      (record.strategy.is_baseline() ? sample.baseline : sample.bar)
          .push_back(value);
    }
  }
  for (const SubjectId& subject : subjects) {
    if (!eligible[subject]) continue;
    for (const MetricSpec& spec : options.schema.metrics) {
      auto by_metric = samples.find(subject);
      if (by_metric == samples.end()) continue;
      auto it = by_metric->second.find(spec.name);
      if (it == by_metric->second.end()) continue;
      const SampleSet& sample = it->second;
      if (sample.baseline.empty() || sample.bar.empty()) continue;
      ComparisonRecord comparison = classify(sample, options.alpha);
      comparison.subject = subject;
      result.comparisons.push_back(std::move(comparison));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json strategy_json(const RestartStrategy& strategy) {
  return {{"n", strategy.n}, {"p", strategy.p}};
}

RestartStrategy strategy_from_json(const json& j) {
  return RestartStrategy(j.at("n").get<int>(), j.at("p").get<double>());
}

}  // namespace

void write_analysis(const AnalysisResult& result,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write analysis file " + path.string());

  json meta;
  meta["kind"] = "meta";
  meta["baseline"] = strategy_json(result.baseline);
  meta["bar"] = strategy_json(result.bar);
  meta["alpha"] = result.alpha;
  meta["theta"] = result.theta;
  meta["subjects"] = result.subject_count;
  meta["eligible"] = result.eligible_count;
  meta["dropped_subjects"] = result.dropped_subjects;
  meta["truncated_input"] = result.truncated_input;
  out << meta.dump() << '\n';

  for (const EligibilityVerdict& verdict : result.verdicts) {
    json j;
    j["kind"] = "eligibility";
    j["subject"] = verdict.subject;
    j["baseline_ok"] = verdict.eligible_baseline;
    j["bar_ok"] = verdict.eligible_bar;
    j["reason"] = verdict.reason;
    out << j.dump() << '\n';
  }
  for (const ComparisonRecord& comparison : result.comparisons) {
    json j;
    j["kind"] = "comparison";
    j["subject"] = comparison.subject;
    j["metric"] = comparison.metric;
    j["p"] = comparison.p_value;
    j["direction"] = to_string(comparison.direction);
    j["significant"] = comparison.significant;
    out << j.dump() << '\n';
  }
  {
    json j;
    j["kind"] = "stability";
    j["p"] = result.stability.p_value;
    j["baseline_total"] = result.stability.baseline_total;
    j["bar_total"] = result.stability.bar_total;
    out << j.dump() << '\n';
  }
  for (const char* side : {"baseline", "bar"}) {
    const ErrorTally& tally =
        side == std::string("baseline") ? result.baseline_tally : result.bar_tally;
    json j;
    j["kind"] = "tally";
    j["side"] = side;
    j["total_errors"] = tally.total_errors;
    j["error_runs"] = tally.error_runs;
    j["runs"] = tally.runs;
    out << j.dump() << '\n';
  }
  if (!out.flush()) throw IoError("failed writing analysis file " + path.string());
}

AnalysisResult read_analysis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open analysis file " + path.string());
  AnalysisResult result;
  std::string line;
  bool saw_meta = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      std::string kind = j.at("kind").get<std::string>();
      if (kind == "meta") {
        result.baseline = strategy_from_json(j.at("baseline"));
        result.bar = strategy_from_json(j.at("bar"));
        result.alpha = j.at("alpha").get<double>();
        result.theta = j.at("theta").get<double>();
        result.subject_count = j.at("subjects").get<int>();
        result.eligible_count = j.at("eligible").get<int>();
        result.dropped_subjects = j.at("dropped_subjects").get<int>();
        result.truncated_input = j.at("truncated_input").get<bool>();
        saw_meta = true;
      } else if (kind == "eligibility") {
        EligibilityVerdict verdict;
        verdict.subject = j.at("subject").get<std::string>();
        verdict.eligible_baseline = j.at("baseline_ok").get<bool>();
        verdict.eligible_bar = j.at("bar_ok").get<bool>();
        verdict.reason = j.at("reason").get<std::string>();
        result.verdicts.push_back(std::move(verdict));
      } else if (kind == "comparison") {
        ComparisonRecord comparison;
        comparison.subject = j.at("subject").get<std::string>();
        comparison.metric = j.at("metric").get<std::string>();
        comparison.p_value = j.at("p").get<double>();
        comparison.direction =
            comparison_direction_from_string(j.at("direction").get<std::string>());
        comparison.significant = j.at("significant").get<bool>();
        result.comparisons.push_back(std::move(comparison));
      } else if (kind == "stability") {
        result.stability.p_value = j.at("p").get<double>();
        result.stability.baseline_total = j.at("baseline_total").get<std::int64_t>();
        result.stability.bar_total = j.at("bar_total").get<std::int64_t>();
      } else if (kind == "tally") {
        ErrorTally tally;
        tally.total_errors = j.at("total_errors").get<std::int64_t>();
        tally.error_runs = j.at("error_runs").get<int>();
        tally.runs = j.at("runs").get<int>();
        if (j.at("side").get<std::string>() == "baseline")
          result.baseline_tally = tally;
        else
          result.bar_tally = tally;
      } else {
        throw IoError("unknown analysis line kind: " + kind);
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("bad analysis file: ") + e.what());
  }
  if (!saw_meta) throw IoError("analysis file lacks a meta line");
  return result;
}

std::string render_report(const AnalysisResult& result) {
  std::string out;
  out += "comparison: baseline " + result.baseline.label() + " vs bet-and-run " +
         result.bar.label() + "\n";
  out += "subjects " + std::to_string(result.subject_count) + ", eligible " +
         std::to_string(result.eligible_count) + ", alpha " +
         format_real(result.alpha) + ", theta " + format_real(result.theta) +
         "\n";
  if (result.dropped_subjects > 0)
    out += "warning: " + std::to_string(result.dropped_subjects) +
           " subject(s) lacked runs under both strategies and were dropped\n";
  if (result.truncated_input)
    out += "warning: input was truncated; analysis covers complete records only\n";

  std::vector<EligibilityVerdict> excluded;
  for (const EligibilityVerdict& verdict : result.verdicts)
    if (!verdict.eligible()) excluded.push_back(verdict);
  if (!excluded.empty()) {
    out += "\nexcluded subjects:\n";
    for (const EligibilityVerdict& verdict : excluded)
      out += "  " + verdict.subject + "  " + verdict.reason + "\n";
  }

  out += "\naggregate (significant results in brackets):\n";
  out += render_aggregate_table(aggregate(result.comparisons));

  out += "\nsignificant classes:\n";
  out += render_significant_report(significant_class_report(result.comparisons));

  out += "\nstability:\n";
  out += "baseline errors " + std::to_string(result.stability.baseline_total) +
         " over " + std::to_string(result.baseline_tally.runs) +
         " runs (error-run fraction " +
         format_real(result.baseline_tally.fraction()) + ")\n";
  out += "bet-and-run errors " + std::to_string(result.stability.bar_total) +
         " over " + std::to_string(result.bar_tally.runs) +
         " runs (error-run fraction " + format_real(result.bar_tally.fraction()) +
         ")\n";
  out += "rank-sum p = " + format_real(result.stability.p_value) + "\n";
  return out;
}

}  // namespace betrun
