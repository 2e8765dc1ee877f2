#include "betrun/cli.hpp"

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "betrun/analysis.hpp"
#include "betrun/campaign.hpp"
#include "betrun/stats.hpp"
#include "betrun/surrogates.hpp"

namespace betrun {
namespace {

namespace fs = std::filesystem;

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string item = comma == std::string::npos
                           ? text.substr(start)
                           : text.substr(start, comma - start);
    try {
      std::size_t used = 0;
      double value = std::stod(item, &used);
      while (used < item.size() && std::isspace((unsigned char)item[used]))
        ++used;
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in sample list");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw ConfigError("empty sample list");
  return values;
}

std::string strategies_text(const std::vector<RestartStrategy>& strategies) {
  std::string text;
  for (const RestartStrategy& strategy : strategies) {
    if (!text.empty()) text += ',';
    text += std::to_string(strategy.n) + ":" + format_real(strategy.p * 100.0);
  }
  return text;
}

struct RunArgs {
  std::string config_path;
  std::string subjects_path;
  std::string records_path;
  std::string scratch_path;
  int n = 0;
  double p_percent = 0.0;
  std::int64_t t_total_ms = 0;
  int reps = 0;
  int workers = 0;
  std::uint64_t seed = 0;
  std::string mode;
  double theta = 0.0;
  std::int64_t interval_ms = 0;
  std::int64_t grace_ms = 0;
  double pace = 0.0;
  bool keep_checkpoints = false;
  int stop_after = -1;
};

int cmd_run(const CLI::App& cmd, const RunArgs& args, std::ostream& out) {
  CampaignConfig config;
  if (!args.config_path.empty())
    config = load_campaign_config(args.config_path);
  if (!args.subjects_path.empty())
    config.suite = load_subject_suite(args.subjects_path);

  if (cmd.count("--n") != cmd.count("--p-percent"))
    throw ConfigError("--n and --p-percent go together");
  if (cmd.count("--n"))
    config.strategies = {RestartStrategy::from_percent(args.n, args.p_percent)};
  if (cmd.count("--t-total-ms")) config.t_total = Millis{args.t_total_ms};
  if (cmd.count("--reps")) config.repetitions = args.reps;
  if (cmd.count("--workers")) config.workers = args.workers;
  if (cmd.count("--seed")) config.master_seed = args.seed;
  if (cmd.count("--mode")) config.mode = budget_mode_from_string(args.mode);
  if (cmd.count("--theta")) config.eligibility_theta = args.theta;
  if (cmd.count("--interval-ms"))
    config.surrogate.checkpoint_interval = Millis{args.interval_ms};
  if (cmd.count("--grace-ms")) config.surrogate.grace = Millis{args.grace_ms};
  if (cmd.count("--pace")) config.surrogate.pace = args.pace;
  if (args.keep_checkpoints) config.keep_checkpoints = true;

  if (const char* env = std::getenv("BETRUN_WORKERS"); env && *env) {
    try {
      std::size_t used = 0;
      int value = std::stoi(env, &used);
      if (used != std::string(env).size() || value < 0)
        throw std::invalid_argument(env);
      config.workers = value;
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad BETRUN_WORKERS value '") + env + "'");
    }
  }

  if (config.suite.subjects.empty())
    throw ConfigError("no subjects: give --subjects or a --config with a "
                      "[subjects] section");
  if (config.t_total.count() <= 0) throw ConfigError("t_total must be positive");
  if (config.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (config.workers < 0) throw ConfigError("workers must be >= 0");
  if (config.eligibility_theta < 0.0 || config.eligibility_theta > 1.0)
    throw ConfigError("theta must be in [0, 1]");
  if (config.surrogate.checkpoint_interval.count() <= 0)
    throw ConfigError("checkpoint interval must be positive");
  if (config.surrogate.grace.count() < 0)
    throw ConfigError("grace must be non-negative");
  if (config.surrogate.pace < 0.0) throw ConfigError("pace must be >= 0");

  fs::path records = args.records_path;
  fs::path scratch = args.scratch_path.empty()
                         ? fs::path(args.records_path + ".scratch")
                         : fs::path(args.scratch_path);

  out << "t_total_ms = " << config.t_total.count() << "\n";
  out << "repetitions = " << config.repetitions << "\n";
  out << "workers = " << config.workers << "\n";
  out << "master_seed = " << config.master_seed << "\n";
  out << "mode = " << to_string(config.mode) << "\n";
  out << "theta = " << format_real(config.eligibility_theta) << "\n";
  out << "checkpoint_interval_ms = "
      << config.surrogate.checkpoint_interval.count() << "\n";
  out << "grace_ms = " << config.surrogate.grace.count() << "\n";
  out << "pace = " << format_real(config.surrogate.pace) << "\n";
  out << "keep_checkpoints = " << (config.keep_checkpoints ? "true" : "false")
      << "\n";
  out << "strategies = " << strategies_text(config.strategies) << "\n";
  out << "subjects =";
  for (const SubjectId& id : config.suite.ids()) out << " " << id;
  out << "\n";
  out << "records = " << records.string() << "\n";
  out << "scratch = " << scratch.string() << "\n";

  CampaignResult result = run_campaign(config, records, scratch, args.stop_after);
  out << "session_records = " << result.session_records << "\n";
  out << "total_records = " << result.total_records << " of "
      << result.expected_records << "\n";
  out << "failed_runs = " << result.failed_runs << "\n";
  return result.failed_runs > 0 ? 2 : 0;
}

struct AnalyzeArgs {
  std::vector<std::string> inputs;
  std::string out_path;
  double alpha = 0.05;
  double theta = 0.5;
};

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  out << "inputs =";
  for (const std::string& input : args.inputs) out << " " << input;
  out << "\n";
  out << "out = " << args.out_path << "\n";
  out << "alpha = " << format_real(args.alpha) << "\n";
  out << "theta = " << format_real(args.theta) << "\n";

  for (const std::string& input : args.inputs)
    if (!fs::exists(input)) throw IoError("no such record file: " + input);

  std::optional<fs::path> second;
  if (args.inputs.size() == 2) second = fs::path(args.inputs[1]);
  LoadedRecords loaded = load_records_for_analysis(args.inputs[0], second);

  AnalysisOptions options;
  options.alpha = args.alpha;
  options.theta = args.theta;
  AnalysisResult result =
      analyze_records(loaded.records, options, loaded.truncated);
  result.dropped_subjects += loaded.dropped_subjects;

  if (result.truncated_input)
    err << "warning: truncated input; analysis covers complete records only\n";
  if (result.dropped_subjects > 0)
    err << "warning: " << result.dropped_subjects
        << " subject(s) lacked runs under both strategies and were dropped\n";

  write_analysis(result, args.out_path);
  out << "subjects = " << result.subject_count << "\n";
  out << "eligible = " << result.eligible_count << "\n";
  out << "comparisons = " << result.comparisons.size() << "\n";
  return 0;
}

int cmd_report(const std::string& input, std::ostream& out) {
  out << "input = " << input << "\n";
  if (!fs::exists(input)) throw IoError("no such analysis file: " + input);
  if (fs::file_size(input) == 0) {
    out << render_aggregate_table(aggregate({}));
    return 0;
  }
  out << "\n" << render_report(read_analysis(input));
  return 0;
}

struct OracleArgs {
  std::vector<std::string> rank_sum;
  std::string mvc;
  std::string tsp;
  std::string suite_path;
  std::string subject;
};

int cmd_oracle(const OracleArgs& args, std::ostream& out) {
  int operations = (args.rank_sum.empty() ? 0 : 1) + (args.mvc.empty() ? 0 : 1) +
                   (args.tsp.empty() ? 0 : 1) + (args.subject.empty() ? 0 : 1);
  if (operations != 1)
    throw ConfigError(
        "pick exactly one of --rank-sum, --mvc, --tsp, --subject");

  if (!args.rank_sum.empty()) {
    out << "oracle = rank-sum " << args.rank_sum[0] << " vs " << args.rank_sum[1]
        << "\n";
    double p = rank_sum_exact_oracle(parse_number_list(args.rank_sum[0]),
                                     parse_number_list(args.rank_sum[1]));
    out << "p = " << format_real(p) << "\n";
    return 0;
  }
  if (!args.mvc.empty()) {
    out << "oracle = mvc " << args.mvc << "\n";
    if (args.mvc.size() < 2 || (args.mvc[0] != 'k' && args.mvc[0] != 'K'))
      throw ConfigError("mvc oracle takes a complete graph k<N>, e.g. k3");
    int vertices = 0;
    try {
      std::size_t used = 0;
      vertices = std::stoi(args.mvc.substr(1), &used);
      if (used + 1 != args.mvc.size()) throw std::invalid_argument(args.mvc);
    } catch (const std::exception&) {
      throw ConfigError("bad graph name '" + args.mvc + "'");
    }
    if (vertices < 2) throw ConfigError("complete graph needs >= 2 vertices");
    SubjectSpec spec{.id = "oracle-" + args.mvc,
                     .family = Family::Mvc,
                     .vertices = vertices,
                     .edge_density = 1.0};
    out << "optimum = " << format_real(reference_optimum(spec)) << "\n";
    return 0;
  }
  if (!args.tsp.empty()) {
    out << "oracle = tsp " << args.tsp << "\n";
    if (args.tsp != "unit-square")
      throw ConfigError("tsp oracle knows only 'unit-square'");
    SubjectSpec spec{.id = "oracle-tsp-unit-square",
                     .family = Family::Tsp,
                     .cities = 4,
                     .unit_square = true};
    out << "optimum = " << format_real(reference_optimum(spec)) << "\n";
    return 0;
  }

  out << "oracle = subject " << args.subject << "\n";
  if (args.suite_path.empty())
    throw ConfigError("--subject needs --suite");
  SubjectSuite suite = load_subject_suite(args.suite_path);
  const SubjectSpec* spec = suite.find(args.subject);
  if (!spec) throw ConfigError("no subject '" + args.subject + "' in suite");
  out << "optimum = " << format_real(reference_optimum(*spec)) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"bet-and-run restart strategies for anytime optimizers"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "execute a campaign");
  run->add_option("--config", run_args.config_path, "campaign config file");
  run->add_option("--subjects", run_args.subjects_path, "subject suite file");
  run->add_option("--records", run_args.records_path, "output record file")
      ->required();
  run->add_option("--scratch", run_args.scratch_path,
                  "checkpoint scratch directory (default <records>.scratch)");
  run->add_option("--n", run_args.n, "instances raced in the starting phase");
  run->add_option("--p-percent", run_args.p_percent,
                  "per-instance evaluation window, percent of the budget");
  run->add_option("--t-total-ms", run_args.t_total_ms, "total budget");
  run->add_option("--reps", run_args.reps, "repetitions per subject");
  run->add_option("--workers", run_args.workers,
                  "worker threads, 0 = host cores");
  run->add_option("--seed", run_args.seed, "campaign master seed");
  run->add_option("--mode", run_args.mode, "strict|emulated-pause");
  run->add_option("--theta", run_args.theta, "eligibility threshold");
  run->add_option("--interval-ms", run_args.interval_ms, "checkpoint interval");
  run->add_option("--grace-ms", run_args.grace_ms, "paced-kill grace window");
  run->add_option("--pace", run_args.pace,
                  "wall milliseconds per virtual millisecond, 0 = turbo");
  run->add_flag("--keep-checkpoints", run_args.keep_checkpoints,
                "keep per-run checkpoint files");
  run->add_option("--stop-after", run_args.stop_after,
                  "stop the session after N new records (test hook)");

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "compare baseline and bet-and-run record files");
  analyze
      ->add_option("records", analyze_args.inputs,
                   "one combined record file, or baseline then bet-and-run")
      ->expected(1, 2)
      ->required();
  analyze->add_option("--out", analyze_args.out_path, "analysis output file")
      ->required();
  analyze->add_option("--alpha", analyze_args.alpha, "significance level");
  analyze->add_option("--theta", analyze_args.theta, "eligibility threshold");

  std::string report_input;
  CLI::App* report = app.add_subcommand("report", "render an analysis file");
  report->add_option("analysis", report_input, "analysis file")->required();

  OracleArgs oracle_args;
  CLI::App* oracle =
      app.add_subcommand("oracle", "brute-force reference answers");
  oracle
      ->add_option("--rank-sum", oracle_args.rank_sum,
                   "two comma-separated samples")
      ->expected(2);
  oracle->add_option("--mvc", oracle_args.mvc, "complete graph, e.g. k3");
  oracle->add_option("--tsp", oracle_args.tsp, "named layout: unit-square");
  oracle->add_option("--suite", oracle_args.suite_path, "subject suite file");
  oracle->add_option("--subject", oracle_args.subject,
                     "suite subject to enumerate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 3;
  }

  try {
    if (run->parsed()) return cmd_run(*run, run_args, out);
    if (analyze->parsed()) return cmd_analyze(analyze_args, out, err);
    if (report->parsed()) return cmd_report(report_input, out);
    return cmd_oracle(oracle_args, out);
  } catch (const InfeasibleSplitError& e) {
    err << "error: infeasible split: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateEvaluationError& e) {
    err << "error: degenerate evaluation window: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace betrun
