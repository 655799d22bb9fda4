#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edmfde/geodesy.hpp"
#include "edmfde/types.hpp"

namespace edmfde::sim {

/// Symmetric circular-orbit constellation (total / planes / phasing).
struct WalkerSpec {
  std::string name;
  std::string id_prefix;
  int total_sats = 24;
  int planes = 3;
  int phasing = 1;
  double inclination_deg = 55.0;
  double orbit_radius_m = 26'560'000.0;
  double epoch_raan_deg = 0.0;
};

/// Throws std::invalid_argument unless total_sats is a positive multiple of
/// planes and the radius is positive.
void validate(const WalkerSpec& spec);

struct Location {
  std::string name;
  geodesy::Geodetic llh;
  double elevation_mask_deg = 10.0;
};

struct ScenarioConfig {
  std::vector<Location> locations;
  double epoch_interval_s = 300.0;
  double duration_h = 24.0;
  double start_time_s = 0.0;
  double noise_sigma_m = 10.0;
  double fault_bias_m = 60.0;
  int fault_count = 0;
  std::vector<WalkerSpec> constellations;
  std::uint64_t seed = 0;

  /// duration / interval + 1, counting both endpoints.
  std::size_t epochs_per_location() const;
};

void validate(const ScenarioConfig& cfg);

/// The nine receiver sites: 30 degree masks for Calgary, London and Zurich,
/// 10 degrees elsewhere.
std::vector<Location> default_locations();

/// GPS-, GLONASS-, Galileo- and BeiDou-like MEO shells.
std::vector<WalkerSpec> default_constellations();

/// Default locations and constellations, 5 minute epochs over 24 hours,
/// 10 m noise and no faults.
ScenarioConfig default_scenario();

/// Satellite positions in an Earth-centered inertial frame aligned with ECEF
/// at t = 0.
std::vector<Vec3> propagate_inertial(const WalkerSpec& spec, double t);

/// Satellite ECEF positions at `t` seconds after the constellation epoch.
std::vector<Vec3> propagate_constellation(const WalkerSpec& spec, double t);

/// Indexes of satellites at or above `mask_deg` elevation.
std::vector<std::size_t> visible_satellites(const geodesy::Geodetic& rx,
                                            std::span<const Vec3> sat_ecef, double mask_deg);

enum class StreamPurpose : std::uint64_t { noise = 1, faults = 2 };

/// Independent generator for one (seed, location, epoch, purpose) key.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t location, std::uint64_t epoch,
                            StreamPurpose purpose);

struct SkippedEpoch {
  std::size_t location_index = 0;
  std::size_t epoch_index = 0;
  std::size_t visible = 0;
  std::string reason;
};

struct EpochOutcome {
  std::optional<EpochSet> epoch;
  std::optional<SkippedEpoch> skipped;
};

/// Visible satellites at one location/epoch with Gaussian noise and
/// `fault_count` randomly chosen biased measurements. Skips the epoch when
/// fewer than 4 satellites are visible or faults would cover all of them.
EpochOutcome synthesize_epoch(const ScenarioConfig& cfg, std::size_t location_index,
                              std::size_t epoch_index);

struct Simulation {
  std::vector<EpochSet> epochs;
  std::vector<SkippedEpoch> skipped;
};

/// Every location and epoch of the sweep, location-major.
Simulation simulate(const ScenarioConfig& cfg);

}  // namespace edmfde::sim
