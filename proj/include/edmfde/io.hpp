#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edmfde/scenario.hpp"
#include "edmfde/types.hpp"

namespace edmfde::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict locale-free parse of the whole field. Throws std::invalid_argument.
double parse_double(std::string_view text);

enum class ClockBiasSource {
  /// Read b_rx from the optional rx_clock_m column; 0 when absent.
  column,
  /// Solve an all-in-view WLS per epoch and use the negated clock estimate.
  wls_estimate,
};

struct LoadOptions {
  ClockBiasSource clock_bias_source = ClockBiasSource::column;
};

struct LoadResult {
  std::vector<EpochSet> epochs;
  std::vector<std::string> warnings;
};

/// Measurement CSV columns in write order. The first 13 are required.
inline constexpr std::string_view kMeasurementColumns[] = {
    "time_s",       "trace_id",     "sv_id",        "constellation", "pr_raw_m",
    "iono_m",       "tropo_m",      "sat_clock_m",  "constel_bias_m", "sat_x_m",
    "sat_y_m",      "sat_z_m",      "weight",       "multipath_flag", "truth_fault",
    "truth_rx_x_m", "truth_rx_y_m", "truth_rx_z_m", "rx_clock_m"};

inline constexpr std::string_view kFlagColumns[] = {
    "time_s", "trace_id", "sv_id", "method", "fault_flag", "exclusion_rank", "statistic_at_stop"};

/// Groups rows by (trace_id, time_s) in order of first appearance. Throws
/// ParseError with the 1-based file line on schema violations. Epochs with
/// fewer than 4 rows are dropped and reported in `warnings`.
LoadResult read_measurements(std::istream& in, const LoadOptions& options = {});
LoadResult load_epochs(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes every epoch, one row per measurement. Optional columns are emitted
/// only when some epoch carries them.
void write_measurements(std::ostream& out, std::span<const EpochSet> epochs);
void save_epochs(const std::filesystem::path& path, std::span<const EpochSet> epochs);

/// One row per measurement. `results` is aligned with `epochs`.
void write_flags(std::ostream& out, std::span<const EpochSet> epochs,
                 std::span<const FdeResult> results);

/// JSON scenario config. Missing keys keep the defaults of
/// sim::default_scenario(); unknown keys are rejected.
sim::ScenarioConfig parse_scenario(std::string_view json_text);
sim::ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const sim::ScenarioConfig& cfg);

}  // namespace edmfde::io
