#include "edmfde/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace edmfde::sim {

using geodesy::kDegToRad;

void validate(const WalkerSpec& spec) {
  if (spec.planes <= 0 || spec.total_sats <= 0 || spec.total_sats % spec.planes != 0) {
    throw std::invalid_argument("constellation " + spec.name +
                                ": total_sats must be a positive multiple of planes");
  }
  if (!(spec.orbit_radius_m > 0.0)) {
    throw std::invalid_argument("constellation " + spec.name + ": orbit radius must be positive");
  }
}

std::size_t ScenarioConfig::epochs_per_location() const {
  return static_cast<std::size_t>(std::floor(duration_h * 3600.0 / epoch_interval_s + 1e-9)) + 1;
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.locations.empty()) throw std::invalid_argument("scenario has no locations");
  if (cfg.constellations.empty()) throw std::invalid_argument("scenario has no constellations");
  if (!(cfg.epoch_interval_s > 0.0)) throw std::invalid_argument("epoch interval must be positive");
  if (!(cfg.duration_h >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  if (!(cfg.noise_sigma_m >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  if (cfg.fault_count < 0) throw std::invalid_argument("fault count must be non-negative");
  for (const WalkerSpec& spec : cfg.constellations) validate(spec);
}

std::vector<Location> default_locations() {
  return {
      {"Calgary", {51.0447, -114.0719, 1045.0}, 30.0},
      {"Cape Town", {-33.9249, 18.4241, 10.0}, 10.0},
      {"Hong Kong", {22.3193, 114.1694, 10.0}, 10.0},
      {"London", {51.5072, -0.1276, 11.0}, 30.0},
      {"Munich", {48.1351, 11.5820, 520.0}, 10.0},
      {"Sao Paulo", {-23.5505, -46.6333, 760.0}, 10.0},
      {"San Francisco", {37.7749, -122.4194, 16.0}, 10.0},
      {"Sydney", {-33.8688, 151.2093, 58.0}, 10.0},
      {"Zurich", {47.3769, 8.5417, 408.0}, 30.0},
  };
}

std::vector<WalkerSpec> default_constellations() {
  return {
      {"GPS", "G", 30, 6, 1, 55.0, 26'560'000.0, 0.0},
      {"GLONASS", "R", 24, 3, 1, 64.8, 25'510'000.0, 15.0},
      {"Galileo", "E", 24, 3, 1, 56.0, 29'600'000.0, 40.0},
      {"BeiDou", "C", 24, 3, 1, 55.0, 27'906'000.0, 75.0},
  };
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.locations = default_locations();
  cfg.constellations = default_constellations();
  return cfg;
}

std::vector<Vec3> propagate_inertial(const WalkerSpec& spec, double t) {
  validate(spec);
  const int per_plane = spec.total_sats / spec.planes;
  const double a = spec.orbit_radius_m;
  const double mean_motion = std::sqrt(geodesy::kEarthMu / (a * a * a));
  const double inc = spec.inclination_deg * kDegToRad;
  const double two_pi = 2.0 * geodesy::kPi;

  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(spec.total_sats));
  for (int p = 0; p < spec.planes; ++p) {
    const double raan = spec.epoch_raan_deg * kDegToRad + two_pi * p / spec.planes;
    for (int s = 0; s < per_plane; ++s) {
      const double u = two_pi * s / per_plane +
                       two_pi * spec.phasing * p / spec.total_sats + mean_motion * t;
      const double cu = std::cos(u);
      const double su = std::sin(u);
      out.emplace_back(a * (std::cos(raan) * cu - std::sin(raan) * su * std::cos(inc)),
                       a * (std::sin(raan) * cu + std::cos(raan) * su * std::cos(inc)),
                       a * su * std::sin(inc));
    }
  }
  return out;
}

std::vector<Vec3> propagate_constellation(const WalkerSpec& spec, double t) {
  if (t < 0.0) throw std::invalid_argument("propagation time must be non-negative");
  std::vector<Vec3> sats = propagate_inertial(spec, t);
  const double theta = geodesy::kEarthRotation * t;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (Vec3& p : sats) p = Vec3(c * p.x() + s * p.y(), -s * p.x() + c * p.y(), p.z());
  return sats;
}

std::vector<std::size_t> visible_satellites(const geodesy::Geodetic& rx,
                                            std::span<const Vec3> sat_ecef, double mask_deg) {
  const Vec3 origin = geodesy::geodetic_to_ecef(rx);
  const Eigen::Matrix3d rot = geodesy::ecef_to_enu_rotation(rx.lat_deg, rx.lon_deg);
  const double min_up = std::sin(mask_deg * kDegToRad);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sat_ecef.size(); ++i) {
    const Vec3 los = (sat_ecef[i] - origin).normalized();
    const double up = rot.row(2).dot(los);
    if (up >= min_up) out.push_back(i);
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t location, std::uint64_t epoch,
                            StreamPurpose purpose) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ location);
  key = splitmix64(key ^ epoch);
  key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
  return std::mt19937_64(key);
}

EpochOutcome synthesize_epoch(const ScenarioConfig& cfg, std::size_t location_index,
                              std::size_t epoch_index) {
  const Location& loc = cfg.locations.at(location_index);
  const double t = cfg.start_time_s + cfg.epoch_interval_s * static_cast<double>(epoch_index);
  const Vec3 truth = geodesy::geodetic_to_ecef(loc.llh);

  EpochSet epoch;
  epoch.trace_id = loc.name;
  epoch.timestamp = t;
  epoch.truth_rx_pos = truth;

  for (const WalkerSpec& spec : cfg.constellations) {
    const std::vector<Vec3> sats = propagate_constellation(spec, t);
    for (std::size_t idx : visible_satellites(loc.llh, sats, loc.elevation_mask_deg)) {
      Measurement m;
      char id[32];
      std::snprintf(id, sizeof id, "%s%02zu", spec.id_prefix.c_str(), idx + 1);
      m.sv_id = id;
      m.constellation = spec.name;
      m.sat_pos = sats[idx];
      m.pseudorange_raw = (truth - m.sat_pos).norm();
      m.weight = cfg.noise_sigma_m > 0.0 ? 1.0 / (cfg.noise_sigma_m * cfg.noise_sigma_m) : 1.0;
      m.truth_fault = false;
      epoch.measurements.push_back(std::move(m));
    }
  }

  const std::size_t visible = epoch.size();
  if (visible < 4 || visible <= static_cast<std::size_t>(cfg.fault_count)) {
    return {std::nullopt,
            SkippedEpoch{location_index, epoch_index, visible,
                         visible < 4 ? "fewer than 4 satellites visible"
                                     : "fault count not below visible satellite count"}};
  }

  if (cfg.noise_sigma_m > 0.0) {
    auto noise_rng = make_stream(cfg.seed, location_index, epoch_index, StreamPurpose::noise);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma_m);
    for (Measurement& m : epoch.measurements) m.pseudorange_raw += noise(noise_rng);
  }

  if (cfg.fault_count > 0) {
    auto fault_rng = make_stream(cfg.seed, location_index, epoch_index, StreamPurpose::faults);
    std::vector<std::size_t> order(visible);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.fault_count); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, visible - 1);
      std::swap(order[i], order[pick(fault_rng)]);
      Measurement& m = epoch.measurements[order[i]];
      m.pseudorange_raw += cfg.fault_bias_m;
      m.truth_fault = true;
    }
  }
  return {std::move(epoch), std::nullopt};
}

Simulation simulate(const ScenarioConfig& cfg) {
  validate(cfg);
  Simulation out;
  const std::size_t epochs = cfg.epochs_per_location();
  for (std::size_t loc = 0; loc < cfg.locations.size(); ++loc) {
    for (std::size_t e = 0; e < epochs; ++e) {
      EpochOutcome outcome = synthesize_epoch(cfg, loc, e);
      if (outcome.epoch) {
        out.epochs.push_back(std::move(*outcome.epoch));
      } else {
        out.skipped.push_back(std::move(*outcome.skipped));
      }
    }
  }
  return out;
}

}  // namespace edmfde::sim
