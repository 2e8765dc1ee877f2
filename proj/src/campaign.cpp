#include "betrun/campaign.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "betrun/rng.hpp"

namespace betrun {
namespace {

using nlohmann::json;

json report_to_json(const InstanceReport& report) {
  json j;
  j["index"] = report.index;
  j["seed"] = report.seed;
  if (report.score) j["score"] = *report.score;
  else j["score"] = nullptr;
  j["metrics"] = json::object();
  for (const auto& [name, value] : report.metrics) j["metrics"][name] = value;
  j["errored"] = report.errored;
  j["produced_output"] = report.produced_output;
  j["error_count"] = report.error_count;
  return j;
}

InstanceReport report_from_json(const json& j) {
  InstanceReport report;
  report.index = j.at("index").get<int>();
  report.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("score").is_null()) report.score = j.at("score").get<double>();
  for (const auto& [name, value] : j.at("metrics").items())
    report.metrics[name] = value.get<double>();
  report.errored = j.at("errored").get<bool>();
  report.produced_output = j.at("produced_output").get<bool>();
  report.error_count = j.at("error_count").get<std::int64_t>();
  return report;
}

json outcome_to_json(const RunOutcome& outcome) {
  json j;
  j["plan"] = {{"t_total_ms", outcome.plan.t_total.count()},
               {"t_k_ms", outcome.plan.t_k.count()},
               {"t_f_ms", outcome.plan.t_f.count()}};
  j["mode"] = to_string(outcome.mode);
  j["starters"] = json::array();
  for (const InstanceReport& starter : outcome.starters)
    j["starters"].push_back(report_to_json(starter));
  if (outcome.survivor_index) j["survivor_index"] = *outcome.survivor_index;
  else j["survivor_index"] = nullptr;
  if (outcome.final_report) j["final"] = report_to_json(*outcome.final_report);
  else j["final"] = nullptr;
  j["failure"] = to_string(outcome.failure);
  j["charged_budget_ms"] = outcome.charged_budget.count();
  j["survivor_ran"] = outcome.survivor_ran;
  return j;
}

RunOutcome outcome_from_json(const json& j, const RestartStrategy& strategy) {
  RunOutcome outcome;
  outcome.strategy = strategy;
  const json& plan = j.at("plan");
  outcome.plan.t_total = Millis{plan.at("t_total_ms").get<std::int64_t>()};
  outcome.plan.t_k = Millis{plan.at("t_k_ms").get<std::int64_t>()};
  outcome.plan.t_f = Millis{plan.at("t_f_ms").get<std::int64_t>()};
  outcome.mode = budget_mode_from_string(j.at("mode").get<std::string>());
  for (const json& starter : j.at("starters"))
    outcome.starters.push_back(report_from_json(starter));
  if (!j.at("survivor_index").is_null())
    outcome.survivor_index = j.at("survivor_index").get<int>();
  if (!j.at("final").is_null())
    outcome.final_report = report_from_json(j.at("final"));
  outcome.failure = run_failure_from_string(j.at("failure").get<std::string>());
  outcome.charged_budget = Millis{j.at("charged_budget_ms").get<std::int64_t>()};
  outcome.survivor_ran = j.at("survivor_ran").get<bool>();
  return outcome;
}

struct Triple {
  std::size_t index = 0;
  const SubjectSpec* spec = nullptr;
  RestartStrategy strategy;
  int repetition = 0;
};

std::vector<Triple> enumerate_triples(const CampaignConfig& config) {
  std::vector<Triple> triples;
  std::size_t index = 0;
  for (const SubjectSpec& spec : config.suite.subjects)
    for (const RestartStrategy& strategy : config.strategies)
      for (int rep = 0; rep < config.repetitions; ++rep)
        triples.push_back({index++, &spec, strategy, rep});
  return triples;
}

}  // namespace

bool is_bad_repetition(const CampaignRecord& record) {
  if (record.outcome.failure != RunFailure::None) return true;
  const auto& final_report = record.outcome.final_report;
  if (!final_report) return true;
  return final_report->errored || !final_report->produced_output;
}

std::string record_to_json_line(const CampaignRecord& record) {
  json j;
  j["subject"] = record.subject;
  j["strategy"] = {{"n", record.strategy.n}, {"p", record.strategy.p}};
  j["repetition"] = record.repetition;
  j["outcome"] = outcome_to_json(record.outcome);
  j["errors"] = record.errors;
  return j.dump();
}

CampaignRecord record_from_json_line(const std::string& line) {
  try {
    json j = json::parse(line);
    CampaignRecord record;
    record.subject = j.at("subject").get<std::string>();
    record.strategy = RestartStrategy(j.at("strategy").at("n").get<int>(),
                                      j.at("strategy").at("p").get<double>());
    record.repetition = j.at("repetition").get<int>();
    record.outcome = outcome_from_json(j.at("outcome"), record.strategy);
    record.errors = j.at("errors").get<std::int64_t>();
    return record;
  } catch (const json::exception& e) {
    throw IoError(std::string("bad campaign record line: ") + e.what());
  }
}

RecordFile read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open record file " + path.string());
  RecordFile file;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      file.records.push_back(record_from_json_line(lines[i]));
    } catch (const IoError&) {
      if (i + 1 == lines.size()) {
        file.truncated_tail = true;
        break;
      }
      throw;
    }
  }
  return file;
}

// ---------------------------------------------------------------------------
// Campaign configuration

namespace {

std::string trim_copy(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<RestartStrategy> parse_strategies(const std::string& text) {
  std::vector<RestartStrategy> strategies;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string entry = trim_copy(
        comma == std::string::npos ? text.substr(start)
                                   : text.substr(start, comma - start));
    std::size_t colon = entry.find(':');
    if (colon == std::string::npos)
      throw ConfigError("strategy entries are n:percent, got '" + entry + "'");
    try {
      int n = std::stoi(entry.substr(0, colon));
      double percent = std::stod(entry.substr(colon + 1));
      strategies.push_back(RestartStrategy::from_percent(n, percent));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad strategy entry '" + entry + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (strategies.empty()) throw ConfigError("no strategies configured");
  return strategies;
}

}  // namespace

CampaignConfig parse_campaign_config(const std::vector<std::string>& lines) {
  CampaignConfig config;
  std::vector<std::string> suite_lines;
  bool in_subjects = false;

  for (const std::string& raw : lines) {
    std::string line = trim_copy(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line == "[subjects]") {
      in_subjects = true;
      continue;
    }
    if (line.front() == '[')
      throw ConfigError("unknown config section: " + line);
    if (in_subjects) {
      suite_lines.push_back(line);
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value, got: " + line);
    std::string key = trim_copy(line.substr(0, eq));
    std::string value = trim_copy(line.substr(eq + 1));
    try {
      if (key == "t_total_ms") config.t_total = Millis{std::stoll(value)};
      else if (key == "repetitions") config.repetitions = std::stoi(value);
      else if (key == "workers") config.workers = std::stoi(value);
      else if (key == "master_seed") config.master_seed = std::stoull(value);
      else if (key == "mode") config.mode = budget_mode_from_string(value);
      else if (key == "theta") config.eligibility_theta = std::stod(value);
      else if (key == "checkpoint_interval_ms")
        config.surrogate.checkpoint_interval = Millis{std::stoll(value)};
      else if (key == "grace_ms") config.surrogate.grace = Millis{std::stoll(value)};
      else if (key == "pace") config.surrogate.pace = std::stod(value);
      else if (key == "keep_checkpoints") config.keep_checkpoints = value == "true";
      else if (key == "strategies") {
        config.strategies = parse_strategies(value);
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
  }

  config.suite = make_subject_suite(suite_lines);
  if (config.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (config.workers < 0) throw ConfigError("workers must be >= 0");
  if (config.eligibility_theta < 0.0 || config.eligibility_theta > 1.0)
    throw ConfigError("theta must be in [0, 1]");
  if (config.t_total.count() <= 0) throw ConfigError("t_total_ms must be positive");
  if (config.suite.subjects.empty()) throw ConfigError("no subjects configured");
  return config;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open campaign config " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return parse_campaign_config(lines);
}

// ---------------------------------------------------------------------------
// Execution

namespace {

// Validates the records already on disk against this campaign and returns
// how many triples they cover. A torn trailing line (crash mid-append) is
// trimmed off; anything else inconsistent aborts, because silently mixing
// two campaigns in one file would poison the analysis.
std::size_t validate_resume_prefix(const std::filesystem::path& records_path,
                                   const std::vector<Triple>& triples,
                                   const SeedSource& seeds, int* failed_runs) {
  std::ifstream in(records_path, std::ios::binary);
  if (!in) throw IoError("cannot read record file " + records_path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();

  std::size_t offset = 0;
  std::size_t count = 0;
  while (offset < content.size()) {
    std::size_t newline = content.find('\n', offset);
    if (newline == std::string::npos) {
      // Unterminated tail: the previous session died mid-append. Drop the
      // partial line; its triple simply runs again.
      std::filesystem::resize_file(records_path, offset);
      break;
    }
    CampaignRecord record =
        record_from_json_line(content.substr(offset, newline - offset));
    if (count >= triples.size())
      throw IoError("record file has more records than this campaign");
    const Triple& expect = triples[count];
    bool matches = record.subject == expect.spec->id &&
                   record.strategy == expect.strategy &&
                   record.repetition == expect.repetition &&
                   !record.outcome.starters.empty() &&
                   record.outcome.starters[0].seed ==
                       seeds.instance_seed(expect.spec->id, expect.repetition, 0);
    if (!matches)
      throw IoError("record " + std::to_string(count) +
                    " does not match this campaign (different config or "
                    "master seed?)");
    if (is_bad_repetition(record)) ++(*failed_runs);
    ++count;
    offset = newline + 1;
  }
  return count;
}

std::string scratch_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "triple-%06zu", index);
  return buf;
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& config,
                            const std::filesystem::path& records_path,
                            const std::filesystem::path& scratch_root,
                            int stop_after_records) {
  for (const RestartStrategy& strategy : config.strategies)
    plan_budget(strategy, config.t_total);  // fail fast on infeasible splits

  const std::vector<Triple> triples = enumerate_triples(config);
  const SeedSource seeds(config.master_seed);

  CampaignResult result;
  result.expected_records = (int)triples.size();

  std::size_t start_from = 0;
  if (std::filesystem::exists(records_path))
    start_from = validate_resume_prefix(records_path, triples, seeds,
                                        &result.failed_runs);

  std::ofstream out(records_path, std::ios::app);
  if (!out) throw IoError("cannot append to record file " + records_path.string());
  std::ofstream timing(records_path.string() + ".timing", std::ios::app);
  std::filesystem::create_directories(scratch_root);

  SurrogateAdapter adapter(config.suite, config.surrogate);

  int workers = config.workers > 0 ? config.workers
                                   : (int)std::thread::hardware_concurrency();
  workers = std::max(1, std::min<int>(workers, (int)triples.size() + 1));

  std::mutex mu;
  std::map<std::size_t, std::pair<std::string, std::string>> pending;
  std::size_t next_flush = start_from;
  std::atomic<std::size_t> next_issue{start_from};
  std::atomic<bool> stop{false};
  std::string abort_reason;

  auto worker = [&] {
    while (!stop.load()) {
      std::size_t i = next_issue.fetch_add(1);
      if (i >= triples.size()) return;
      const Triple& triple = triples[i];
      auto begun = std::chrono::steady_clock::now();

      CampaignRecord record;
      record.subject = triple.spec->id;
      record.strategy = triple.strategy;
      record.repetition = triple.repetition;
      std::filesystem::path scratch = scratch_root / scratch_name(i);
      try {
        record.outcome = run_bet_and_run(triple.spec->id, triple.strategy,
                                         config.t_total, config.mode, adapter,
                                         seeds, triple.repetition, scratch);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (abort_reason.empty()) abort_reason = e.what();
        stop.store(true);
        return;
      }
      if (!config.keep_checkpoints) {
        std::error_code ec;
        std::filesystem::remove_all(scratch, ec);
      }
      record.errors = record.outcome.final_report
                          ? record.outcome.final_report->error_count
                          : 0;
      record.wall = std::chrono::duration_cast<Millis>(
          std::chrono::steady_clock::now() - begun);

      std::string timing_line = std::to_string(i) + " " + record.subject + " " +
                                record.strategy.label() + " rep" +
                                std::to_string(record.repetition) + " " +
                                std::to_string(record.wall.count()) + "ms";

      std::lock_guard<std::mutex> lock(mu);
      pending[i] = {record_to_json_line(record), timing_line};
      // Flush in triple order so the file is a deterministic prefix no
      // matter how the pool interleaves.
      while (!pending.empty() && pending.begin()->first == next_flush) {
        if (stop_after_records >= 0 && result.session_records >= stop_after_records) {
          stop.store(true);
          return;
        }
        const auto& [line, tline] = pending.begin()->second;
        out << line << '\n';
        out.flush();
        if (timing) timing << tline << '\n';
        ++result.session_records;
        ++next_flush;
        pending.erase(pending.begin());
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  out.flush();

  if (!abort_reason.empty()) throw IoError("campaign aborted: " + abort_reason);

  // Failed-run accounting covers exactly what reached the file.
  RecordFile on_disk = read_record_file(records_path);
  result.total_records = (int)on_disk.records.size();
  result.failed_runs = 0;
  for (const CampaignRecord& record : on_disk.records)
    if (is_bad_repetition(record)) ++result.failed_runs;
  return result;
}

// ---------------------------------------------------------------------------
// Eligibility and error accounting

namespace {

void split_by_strategy(const std::vector<CampaignRecord>& records,
                       RestartStrategy* baseline, RestartStrategy* bar) {
  bool saw_baseline = false, saw_bar = false;
  for (const CampaignRecord& record : records) {
    if (record.strategy.is_baseline()) {
      *baseline = record.strategy;
      saw_baseline = true;
    } else {
      if (saw_bar && !(record.strategy == *bar))
        throw ConfigError("records mix more than one bet-and-run strategy");
      *bar = record.strategy;
      saw_bar = true;
    }
  }
  if (!saw_baseline || !saw_bar)
    throw ConfigError("records must cover a baseline and a bet-and-run strategy");
}

}  // namespace

std::pair<RestartStrategy, RestartStrategy> split_strategies(
    const std::vector<CampaignRecord>& records) {
  RestartStrategy baseline, bar;
  split_by_strategy(records, &baseline, &bar);
  return {baseline, bar};
}

std::vector<EligibilityVerdict> filter_eligibility(
    const std::vector<CampaignRecord>& records, double theta) {
  RestartStrategy baseline, bar;
  split_by_strategy(records, &baseline, &bar);

  // subject -> (bad, total) per side, in first-seen subject order
  std::vector<SubjectId> order;
  std::map<SubjectId, std::array<int, 4>> counts;
  for (const CampaignRecord& record : records) {
    if (!counts.count(record.subject)) order.push_back(record.subject);
    auto& c = counts[record.subject];
    int side = record.strategy.is_baseline() ? 0 : 2;
    c[side] += is_bad_repetition(record) ? 1 : 0;
    c[side + 1] += 1;
  }

  std::vector<EligibilityVerdict> verdicts;
  for (const SubjectId& subject : order) {
    const auto& c = counts[subject];
    EligibilityVerdict verdict;
    verdict.subject = subject;
    if (c[1] == 0 || c[3] == 0)
      throw ConfigError("incomplete records for subject " + subject);
    verdict.eligible_baseline = (double)c[0] / (double)c[1] <= theta;
    verdict.eligible_bar = (double)c[2] / (double)c[3] <= theta;
    if (!verdict.eligible_baseline && !verdict.eligible_bar)
      verdict.reason = "BOTH_ERRORS";
    else if (!verdict.eligible_baseline)
      verdict.reason = "BASELINE_ERRORS";
    else if (!verdict.eligible_bar)
      verdict.reason = "BAR_ERRORS";
    verdicts.push_back(std::move(verdict));
  }
  return verdicts;
}

ErrorTally error_tally(const std::vector<CampaignRecord>& records,
                       const RestartStrategy& strategy) {
  ErrorTally tally;
  for (const CampaignRecord& record : records) {
    if (!(record.strategy == strategy)) continue;
    ++tally.runs;
    tally.total_errors += record.errors;
    if (record.errors > 0 || record.outcome.failure != RunFailure::None)
      ++tally.error_runs;
  }
  return tally;
}

}  // namespace betrun
