#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "../support.hpp"
#include "edmfde/edm_fde.hpp"
#include "edmfde/errors.hpp"
#include "edmfde/io.hpp"
#include "edmfde/scenario.hpp"

using namespace edmfde;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const char* kHeader =
    "time_s,trace_id,sv_id,constellation,pr_raw_m,iono_m,tropo_m,sat_clock_m,constel_bias_m,"
    "sat_x_m,sat_y_m,sat_z_m,weight\n";

std::string row(double t, const char* sv, const char* pr) {
  std::ostringstream s;
  s << t << ",trace," << sv << ",GPS," << pr << ",0,0,0,0,15600000,7540000,20140000,1\n";
  return s.str();
}

}  // namespace

TEST_CASE("double formatting round-trips exactly") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> d(-3e7, 3e7);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng) / (1 + i % 7);
    CHECK(same_bits(io::parse_double(io::format_double(v)), v));
  }
  CHECK_THROWS_AS(io::parse_double("12a"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_double(""), std::invalid_argument);
  CHECK(io::parse_double("+2.5") == 2.5);
}

TEST_CASE("simulator output round-trips through CSV bit-exactly") {
  sim::ScenarioConfig cfg = sim::default_scenario();
  cfg.duration_h = 1.0;
  cfg.fault_count = 2;
  cfg.seed = 9;
  auto epochs = sim::simulate(cfg).epochs;
  epochs[0].measurements[0].multipath = true;
  epochs[1].rx_clock_bias_est = -12.25;

  std::stringstream buf;
  io::write_measurements(buf, epochs);
  const io::LoadResult back = io::read_measurements(buf);
  CHECK(back.warnings.empty());
  REQUIRE(back.epochs.size() == epochs.size());
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const EpochSet& a = epochs[e];
    const EpochSet& b = back.epochs[e];
    CHECK(a.trace_id == b.trace_id);
    CHECK(same_bits(a.timestamp, b.timestamp));
    CHECK(a.rx_clock_bias_est == b.rx_clock_bias_est);
    REQUIRE(b.truth_rx_pos);
    for (int k = 0; k < 3; ++k) CHECK(same_bits((*a.truth_rx_pos)(k), (*b.truth_rx_pos)(k)));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Measurement& x = a.measurements[i];
      const Measurement& y = b.measurements[i];
      CHECK(x.sv_id == y.sv_id);
      CHECK(x.constellation == y.constellation);
      CHECK(same_bits(x.pseudorange_raw, y.pseudorange_raw));
      CHECK(same_bits(x.weight, y.weight));
      for (int k = 0; k < 3; ++k) CHECK(same_bits(x.sat_pos(k), y.sat_pos(k)));
      CHECK(x.truth_fault == y.truth_fault);
      CHECK(x.multipath.value_or(false) == y.multipath.value_or(false));
    }
  }
}

TEST_CASE("malformed rows raise ParseError with the line number") {
  std::stringstream in;
  in << kHeader << row(0, "G01", "2.1e7") << row(0, "G02", "abc");
  try {
    io::read_measurements(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("pr_raw_m") != std::string::npos);
  }

  std::stringstream missing("time_s,trace_id\n0,a\n");
  CHECK_THROWS_AS(io::read_measurements(missing), ParseError);

  std::stringstream dup;
  dup << kHeader << row(0, "G01", "2.1e7") << row(0, "G01", "2.1e7");
  CHECK_THROWS_AS(io::read_measurements(dup), ParseError);

  std::stringstream short_row;
  short_row << kHeader << "0,trace,G01\n";
  CHECK_THROWS_AS(io::read_measurements(short_row), ParseError);

  std::stringstream inf;
  inf << kHeader << row(0, "G01", "inf");
  CHECK_THROWS_AS(io::read_measurements(inf), ParseError);
}

TEST_CASE("small epochs are skipped with a warning") {
  std::stringstream in;
  in << kHeader << row(0, "G01", "2.1e7") << row(0, "G02", "2.1e7") << row(0, "G03", "2.1e7");
  in << row(1, "G01", "2.1e7") << row(1, "G02", "2.1e7") << row(1, "G03", "2.1e7")
     << row(1, "G04", "2.1e7");
  const auto r = io::read_measurements(in);
  CHECK(r.epochs.size() == 1);
  CHECK(r.epochs[0].timestamp == 1.0);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("WLS clock estimate removes a common receiver clock offset") {
  std::mt19937_64 rng(52);
  const auto g = support::random_geometry(rng, 9);
  const std::vector<EpochSet> epochs = {support::make_epoch(g, 4321.0)};
  std::stringstream buf;
  io::write_measurements(buf, epochs);
  const auto loaded = io::read_measurements(buf, {io::ClockBiasSource::wls_estimate});
  REQUIRE(loaded.epochs.size() == 1);
  const EpochSet& e = loaded.epochs[0];
  REQUIRE(e.rx_clock_bias_est);
  CHECK(*e.rx_clock_bias_est == doctest::Approx(-4321.0).epsilon(1e-6));
  const Vector ranges = conditioned_ranges(e);
  for (int i = 0; i < 9; ++i) CHECK(std::abs(ranges(i) - g.ranges[i]) < 1e-3);
}

TEST_CASE("flag CSV has one row per measurement") {
  std::mt19937_64 rng(53);
  const std::vector<EpochSet> epochs = {support::random_epoch(rng, 6), support::random_epoch(rng, 7)};
  std::vector<FdeResult> results(2);
  for (std::size_t i = 0; i < 2; ++i) {
    results[i].sv_ids = {};
    results[i].flags.assign(epochs[i].size(), false);
    results[i].statistic_trace = {0.25};
  }
  results[1].flags[2] = true;
  results[1].exclusion_order = {epochs[1].measurements[2].sv_id};
  std::stringstream out;
  io::write_flags(out, epochs, results);
  std::vector<std::string> lines;
  for (std::string l; std::getline(out, l);) lines.push_back(l);
  REQUIRE(lines.size() == 14);
  CHECK(lines[0] == "time_s,trace_id,sv_id,method,fault_flag,exclusion_rank,statistic_at_stop");
  CHECK(lines[1] == "0,synthetic,S1,edm,0,,0.25");
  CHECK(lines[9] == "0,synthetic,S3,edm,1,1,0.25");
}

TEST_CASE("scenario config round trip and validation") {
  sim::ScenarioConfig cfg = sim::default_scenario();
  cfg.seed = 18446744073709551615ULL;
  cfg.fault_count = 8;
  const sim::ScenarioConfig back = io::parse_scenario(io::scenario_to_json(cfg));
  CHECK(back.seed == cfg.seed);
  CHECK(back.fault_count == 8);
  REQUIRE(back.locations.size() == 9);
  CHECK(back.locations[1].name == "Cape Town");
  CHECK(back.constellations.size() == cfg.constellations.size());
  CHECK(back.constellations[0].orbit_radius_m == cfg.constellations[0].orbit_radius_m);

  CHECK(io::parse_scenario("{}").locations.size() == 9);
  CHECK(io::parse_scenario(R"({"fault_count": 3})").fault_count == 3);
  CHECK_THROWS_AS(io::parse_scenario(R"({"faults": 3})"), ParseError);
  CHECK_THROWS_AS(io::parse_scenario("{"), ParseError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"locations": [{"name": "x"}]})"), ParseError);
  CHECK_THROWS_AS(
      io::parse_scenario(
          R"({"constellations": [{"name":"A","id_prefix":"A","total_sats":31,"planes":6,"inclination_deg":55,"orbit_radius_m":2.6e7}]})"),
      std::invalid_argument);
}
