#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "betrun/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"betrun"};
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  std::ostringstream out, err;
  CliResult result;
  result.code =
      betrun::run_cli((int)argv.size(), argv.data(), out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("betrun-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& content) {
  std::ofstream(path) << content;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const std::string kTinySuite = "plateau,2,decay=0.004:0.01\n";

const std::string kTinyCampaign =
    "t_total_ms = 1000\n"
    "repetitions = 3\n"
    "workers = 2\n"
    "master_seed = 11\n"
    "strategies = 1:100,4:10\n"
    "[subjects]\n"
    "plateau,2,decay=0.004:0.01\n";

}  // namespace

TEST_CASE("oracle answers the documented examples") {
  CliResult rank = cli({"oracle", "--rank-sum", "1,2,3", "4,5,6"});
  CHECK(rank.code == 0);
  CHECK(rank.out.find("p = 0.1\n") != std::string::npos);

  CliResult mvc = cli({"oracle", "--mvc", "k3"});
  CHECK(mvc.code == 0);
  CHECK(mvc.out.find("optimum = 2\n") != std::string::npos);

  CliResult tsp = cli({"oracle", "--tsp", "unit-square"});
  CHECK(tsp.code == 0);
  CHECK(tsp.out.find("optimum = 4\n") != std::string::npos);
}

TEST_CASE("oracle misuse is a config error") {
  CHECK(cli({"oracle"}).code == 3);
  CHECK(cli({"oracle", "--mvc", "k3", "--tsp", "unit-square"}).code == 3);
  CHECK(cli({"oracle", "--mvc", "q5"}).code == 3);
  CHECK(cli({"oracle", "--tsp", "grid"}).code == 3);
  CHECK(cli({"oracle", "--rank-sum", "1,x", "2"}).code == 3);
  CHECK(cli({"oracle", "--subject", "plateau-00"}).code == 3);  // no --suite

  // Enumeration refuses instances beyond the oracle's reach.
  CliResult large = cli({"oracle", "--mvc", "k30"});
  CHECK(large.code == 3);
  CHECK(large.err.find("error:") != std::string::npos);
}

TEST_CASE("parse failures and help map to the documented exit codes") {
  CHECK(cli({}).code == 3);                       // missing subcommand
  CHECK(cli({"frobnicate"}).code == 3);           // unknown subcommand
  CHECK(cli({"run"}).code == 3);                  // missing --records
  CHECK(cli({"run", "--records", "r", "--bogus"}).code == 3);
  CHECK(cli({"analyze", "--out", "x"}).code == 3);  // missing input
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("run validates its configuration") {
  fs::path dir = fresh_dir("validate");
  fs::path suite = write_file(dir / "suite.cfg", kTinySuite);
  fs::path records = dir / "records.jsonl";

  CliResult lonely = cli({"run", "--records", records.string(), "--subjects",
                          suite.string(), "--n", "8"});
  CHECK(lonely.code == 3);
  CHECK(lonely.err.find("--n and --p-percent go together") != std::string::npos);

  CHECK(cli({"run", "--records", records.string()}).code == 3);  // no subjects

  CliResult infeasible =
      cli({"run", "--records", records.string(), "--subjects", suite.string(),
           "--n", "40", "--p-percent", "3", "--t-total-ms", "300000"});
  CHECK(infeasible.code == 3);
  CHECK(infeasible.err.find("infeasible split") != std::string::npos);

  CliResult degenerate =
      cli({"run", "--records", records.string(), "--subjects", suite.string(),
           "--n", "1", "--p-percent", "0.0001", "--t-total-ms", "100"});
  CHECK(degenerate.code == 3);
  CHECK(degenerate.err.find("degenerate evaluation window") != std::string::npos);

  CHECK_FALSE(fs::exists(records));  // nothing was written
}

TEST_CASE("run executes a campaign and echoes its effective config") {
  fs::path dir = fresh_dir("pipeline");
  fs::path config = write_file(dir / "campaign.cfg", kTinyCampaign);
  fs::path records = dir / "records.jsonl";

  CliResult run = cli({"run", "--config", config.string(), "--records",
                       records.string()});
  CHECK(run.code == 0);
  CHECK(run.out.find("t_total_ms = 1000\n") != std::string::npos);
  CHECK(run.out.find("workers = 2\n") != std::string::npos);
  CHECK(run.out.find("mode = strict\n") != std::string::npos);
  CHECK(run.out.find("strategies = 1:100,4:10\n") != std::string::npos);
  CHECK(run.out.find("subjects = plateau-00 plateau-01\n") != std::string::npos);
  CHECK(run.out.find("scratch = " + records.string() + ".scratch\n") !=
        std::string::npos);
  CHECK(run.out.find("session_records = 12\n") != std::string::npos);
  CHECK(run.out.find("total_records = 12 of 12\n") != std::string::npos);
  CHECK(run.out.find("failed_runs = 0\n") != std::string::npos);

  // Re-running a completed campaign resumes into a no-op.
  CliResult again = cli({"run", "--config", config.string(), "--records",
                         records.string()});
  CHECK(again.code == 0);
  CHECK(again.out.find("session_records = 0\n") != std::string::npos);

  // A second full run from scratch produces the identical file.
  fs::path records2 = dir / "records2.jsonl";
  CHECK(cli({"run", "--config", config.string(), "--records",
             records2.string()})
            .code == 0);
  CHECK(slurp(records) == slurp(records2));

  fs::path analysis = dir / "analysis.jsonl";
  CliResult analyze = cli({"analyze", records.string(), "--out",
                           analysis.string()});
  CHECK(analyze.code == 0);
  CHECK(analyze.out.find("subjects = 2\n") != std::string::npos);
  CHECK(analyze.out.find("eligible = 2\n") != std::string::npos);
  CHECK(analyze.out.find("comparisons = 4\n") != std::string::npos);
  CHECK(analyze.err.empty());

  CliResult report = cli({"report", analysis.string()});
  CHECK(report.code == 0);
  CHECK(report.out.find("baseline 1/100%") != std::string::npos);
  CHECK(report.out.find("Metric") != std::string::npos);
}

TEST_CASE("a campaign whose runs fail exits with the partial-failure code") {
  fs::path dir = fresh_dir("failures");
  fs::path suite =
      write_file(dir / "suite.cfg", "lagged,1,targets=10,lag_ms=900,cover=0.4\n");
  fs::path records = dir / "records.jsonl";

  // t_k = 50ms, far below the 900ms startup lag: no starter ever reports.
  CliResult run =
      cli({"run", "--records", records.string(), "--subjects", suite.string(),
           "--n", "4", "--p-percent", "5", "--t-total-ms", "1000", "--reps",
           "2", "--seed", "3"});
  CHECK(run.code == 2);
  CHECK(run.out.find("failed_runs = 2\n") != std::string::npos);
}

TEST_CASE("BETRUN_WORKERS overrides the worker count") {
  fs::path dir = fresh_dir("env");
  fs::path suite = write_file(dir / "suite.cfg", kTinySuite);
  fs::path records = dir / "records.jsonl";

  setenv("BETRUN_WORKERS", "3", 1);
  CliResult run =
      cli({"run", "--records", records.string(), "--subjects", suite.string(),
           "--t-total-ms", "2000", "--reps", "1", "--workers", "1"});
  CHECK(run.code == 0);
  CHECK(run.out.find("workers = 3\n") != std::string::npos);

  setenv("BETRUN_WORKERS", "many", 1);
  CliResult bad =
      cli({"run", "--records", (dir / "r2.jsonl").string(), "--subjects",
           suite.string(), "--t-total-ms", "2000", "--reps", "1"});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("BETRUN_WORKERS") != std::string::npos);
  unsetenv("BETRUN_WORKERS");
}

TEST_CASE("analyze and report surface missing files as io errors") {
  fs::path dir = fresh_dir("missing");
  CliResult analyze = cli({"analyze", (dir / "none.jsonl").string(), "--out",
                           (dir / "a.jsonl").string()});
  CHECK(analyze.code == 3);
  CHECK(analyze.err.find("no such record file") != std::string::npos);

  CliResult report = cli({"report", (dir / "none.jsonl").string()});
  CHECK(report.code == 3);
  CHECK(report.err.find("no such analysis file") != std::string::npos);

  // An empty analysis renders an empty aggregate table, not an error.
  fs::path empty = write_file(dir / "empty.jsonl", "");
  CliResult blank = cli({"report", empty.string()});
  CHECK(blank.code == 0);
  CHECK(blank.out.find("Metric") != std::string::npos);
}
