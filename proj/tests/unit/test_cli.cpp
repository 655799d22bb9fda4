#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "edmfde/cli.hpp"
#include "edmfde/io.hpp"

using namespace edmfde;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "edmfde");
  std::ostringstream out, err;
  const int code = cli::cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "edmfde_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  const Run bad_flag = run({"complexity", "--bogus"});
  CHECK(bad_flag.code == 1);
  CHECK(bad_flag.err.find("Usage") != std::string::npos);
  CHECK(run({"fde", "--method", "nope", "--threshold", "1", "--in", "x"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("complexity output") {
  const Run r = run({"complexity", "--f", "4", "--k", "10"});
  REQUIRE(r.code == 0);
  long long edm48 = 0;
  for (int a = 0; a <= 4; ++a) edm48 += static_cast<long long>(49 - a) * (49 - a) * (49 - a);
  CHECK(r.out.find("\n48,4,10," + std::to_string(edm48) + ",") != std::string::npos);
  CHECK(line_count(r.out) == 92);
}

TEST_CASE("simulate then fde, roc, sweep and bench") {
  const auto dir = temp_dir();
  const std::string meas = (dir / "meas.csv").string();
  const std::string cfg = (dir / "cfg.json").string();
  std::ofstream(cfg) << R"({"duration_h": 0.5, "fault_count": 4, "fault_bias_m": 80})";

  REQUIRE(run({"simulate", "--config", cfg, "--seed", "3", "--out", meas}).code == 0);
  const auto loaded = io::load_epochs(meas);
  CHECK(loaded.epochs.size() == 9 * 7);
  std::size_t rows = 0;
  for (const EpochSet& e : loaded.epochs) rows += e.size();

  const Run again = run({"simulate", "--config", cfg, "--seed", "3"});
  std::ifstream f(meas);
  std::stringstream file;
  file << f.rdbuf();
  CHECK(again.out == file.str());
  CHECK(run({"simulate", "--config", cfg, "--seed", "4"}).out != file.str());

  const Run flags = run({"fde", "--method", "edm", "--threshold", "3e-7", "--in", meas});
  REQUIRE(flags.code == 0);
  CHECK(line_count(flags.out) == rows + 1);
  const Run ss = run({"fde", "--method", "ss", "--threshold", "5", "--in", meas});
  CHECK(ss.code == 0);
  CHECK(line_count(ss.out) == rows + 1);

  const Run roc = run({"roc", "--method", "residual", "--grid", "log:1:1000:7", "--in", meas});
  REQUIRE(roc.code == 0);
  CHECK(line_count(roc.out) == 8);
  CHECK(roc.out.rfind("method,threshold,true_positive_rate,false_alarm_rate,auc\n", 0) == 0);

  const Run sweep = run({"sweep", "--method", "edm", "--grid", "1e-7,2e-7,4e-7", "--in", meas});
  REQUIRE(sweep.code == 0);
  CHECK(line_count(sweep.out) == 5);
  CHECK(sweep.out.find("\nnone,,") != std::string::npos);

  const Run bench = run({"bench", "--method", "edm", "--threshold", "3e-7", "--method",
                         "residual", "--threshold", "50", "--in", meas});
  REQUIRE(bench.code == 0);
  CHECK(bench.out.find("residual,faults,4,") != std::string::npos);
  CHECK(run({"bench", "--method", "edm", "--in", meas, "--threshold", "1", "--threshold", "2"})
            .code == 1);
}

TEST_CASE("input errors exit with 1") {
  const auto dir = temp_dir();
  const std::string bad = (dir / "bad.csv").string();
  std::ofstream(bad) << "time_s,trace_id\n0,x\n";
  const Run r = run({"fde", "--method", "edm", "--threshold", "0.5", "--in", bad});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing column") != std::string::npos);
  CHECK(run({"roc", "--method", "edm", "--in", "/no/such/file.csv"}).code == 1);

  const std::string clean = (dir / "clean.csv").string();
  const std::string cfg = (dir / "clean.json").string();
  std::ofstream(cfg) << R"({"duration_h": 0})";
  REQUIRE(run({"simulate", "--config", cfg, "--out", clean}).code == 0);
  CHECK(run({"roc", "--method", "edm", "--in", clean}).code == 1);
}

TEST_CASE("grid specs") {
  CHECK(cli::parse_grid("log:1:100:3", FdeMethod::edm) == std::vector<double>{1.0, 10.0, 100.0});
  CHECK(cli::parse_grid("0.5,0.6", FdeMethod::edm).size() == 2);
  CHECK(cli::parse_grid("default", FdeMethod::edm).size() == 17);
  CHECK_THROWS_AS(cli::parse_grid("log:1:2", FdeMethod::edm), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_grid("0.5", FdeMethod::edm), std::invalid_argument);
}
