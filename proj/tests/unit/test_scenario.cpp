#include <doctest.h>

#include <set>

#include "edmfde/geodesy.hpp"
#include "edmfde/scenario.hpp"

using namespace edmfde;
using namespace edmfde::sim;

TEST_CASE("geodetic round trip") {
  for (double lat : {-89.0, -33.9, 0.0, 22.3, 51.5, 89.9}) {
    for (double lon : {-179.0, -46.6, 0.0, 114.2}) {
      const geodesy::Geodetic llh{lat, lon, 850.0};
      const auto back = geodesy::ecef_to_geodetic(geodesy::geodetic_to_ecef(llh));
      CHECK(back.lat_deg == doctest::Approx(lat).epsilon(1e-9));
      CHECK(back.alt_m == doctest::Approx(850.0).epsilon(1e-6));
    }
  }
  const Vec3 equator = geodesy::geodetic_to_ecef({0.0, 0.0, 0.0});
  CHECK(equator.x() == doctest::Approx(geodesy::kSemiMajor));
}

TEST_CASE("horizontal error ignores the vertical component") {
  const geodesy::Geodetic llh{47.0, 8.0, 400.0};
  const Vec3 truth = geodesy::geodetic_to_ecef(llh);
  const Eigen::Matrix3d rot = geodesy::ecef_to_enu_rotation(llh.lat_deg, llh.lon_deg);
  const Vec3 moved = truth + rot.transpose() * Vec3(3.0, 4.0, 100.0);
  CHECK(geodesy::horizontal_error(moved, truth) == doctest::Approx(5.0));
}

TEST_CASE("Walker validation") {
  WalkerSpec bad{"X", "X", 31, 6, 1, 55.0, 2.6e7, 0.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.total_sats = 30;
  CHECK_NOTHROW(validate(bad));
}

TEST_CASE("orbits keep their radius and start in the inertial frame") {
  for (const WalkerSpec& w : default_constellations()) {
    const auto t0 = propagate_constellation(w, 0.0);
    const auto i0 = propagate_inertial(w, 0.0);
    REQUIRE(t0.size() == static_cast<std::size_t>(w.total_sats));
    for (std::size_t i = 0; i < t0.size(); ++i) CHECK((t0[i] - i0[i]).norm() < 1e-6);
    for (const Vec3& p : propagate_constellation(w, 3600.0)) {
      CHECK(p.norm() == doctest::Approx(w.orbit_radius_m).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(propagate_constellation(default_constellations()[0], -1.0),
                  std::invalid_argument);
}

TEST_CASE("visible satellites respect the mask") {
  const Location loc = default_locations()[0];
  for (const WalkerSpec& w : default_constellations()) {
    const auto sats = propagate_constellation(w, 900.0);
    const auto vis = visible_satellites(loc.llh, sats, loc.elevation_mask_deg);
    const std::set<std::size_t> in(vis.begin(), vis.end());
    for (std::size_t i = 0; i < sats.size(); ++i) {
      const double el = geodesy::elevation_deg(loc.llh, sats[i]);
      CHECK((el >= loc.elevation_mask_deg) == (in.count(i) == 1));
    }
  }
}

TEST_CASE("default sweep size") {
  const ScenarioConfig cfg = default_scenario();
  CHECK(cfg.epochs_per_location() == 289);
  const Simulation s = simulate(cfg);
  CHECK(s.epochs.size() + s.skipped.size() == 2601);
  CHECK(s.skipped.empty());
  std::set<std::string> traces;
  for (const EpochSet& e : s.epochs) {
    traces.insert(e.trace_id);
    CHECK(e.size() >= 4);
    CHECK_NOTHROW(validate(e));
  }
  CHECK(traces.size() == 9);
}

TEST_CASE("simulation is deterministic per seed and labels faults") {
  ScenarioConfig cfg = default_scenario();
  cfg.duration_h = 0.5;
  cfg.fault_count = 3;
  cfg.seed = 42;
  const Simulation a = simulate(cfg);
  const Simulation b = simulate(cfg);
  cfg.seed = 43;
  const Simulation c = simulate(cfg);
  REQUIRE(a.epochs.size() == b.epochs.size());
  bool differs = false;
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].truth_fault_count() == 3);
    for (std::size_t i = 0; i < a.epochs[e].size(); ++i) {
      CHECK(a.epochs[e].measurements[i].pseudorange_raw ==
            b.epochs[e].measurements[i].pseudorange_raw);
      differs = differs || a.epochs[e].measurements[i].pseudorange_raw !=
                               c.epochs[e].measurements[i].pseudorange_raw;
    }
  }
  CHECK(differs);
}

TEST_CASE("noiseless fault-free pseudoranges are geometric ranges") {
  ScenarioConfig cfg = default_scenario();
  cfg.duration_h = 0.0;
  cfg.noise_sigma_m = 0.0;
  const auto out = synthesize_epoch(cfg, 4, 0);
  REQUIRE(out.epoch);
  for (const Measurement& m : out.epoch->measurements) {
    CHECK(m.pseudorange_raw == (*out.epoch->truth_rx_pos - m.sat_pos).norm());
    CHECK(m.weight == 1.0);
  }
}

TEST_CASE("epochs with too many faults are skipped") {
  ScenarioConfig cfg = default_scenario();
  cfg.duration_h = 0.0;
  cfg.fault_count = 100;
  const Simulation s = simulate(cfg);
  CHECK(s.epochs.empty());
  CHECK(s.skipped.size() == 9);
}
