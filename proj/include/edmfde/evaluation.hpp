#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "edmfde/edm_fde.hpp"
#include "edmfde/residual_fde.hpp"
#include "edmfde/solution_separation.hpp"
#include "edmfde/types.hpp"

namespace edmfde::eval {

/// Per-method options used when a sweep dispatches by FdeMethod.
struct MethodSettings {
  EdmFdeOptions edm;
  ResidualFdeOptions residual;
  SsConfig ss;
};

/// Runs one method. For edm2021 the statistic option is forced to legacy;
/// for ss the threshold is used for both detection and exclusion.
FdeResult run_fde(const EpochSet& epoch, FdeMethod method, double threshold,
                  const MethodSettings& settings = {});

/// One threshold's results, aligned with the swept epochs.
struct ThresholdRun {
  double threshold = 0.0;
  std::vector<FdeResult> results;
};

/// Runs `method` at every grid threshold over every epoch. Epochs are split
/// across `workers` threads.
std::vector<ThresholdRun> sweep(std::span<const EpochSet> epochs, FdeMethod method,
                                std::span<const double> grid, const MethodSettings& settings = {},
                                unsigned workers = 1);

struct RocPoint {
  double threshold = 0.0;
  double true_positive_rate = 0.0;
  double false_alarm_rate = 0.0;
};

/// Pooled rates per threshold: flagged-and-faulty over faulty, and
/// flagged-and-fault-free over fault-free, across all epochs. Sorted by
/// false-alarm rate, then true-positive rate. Throws UndefinedRate when the
/// pool has no faulty or no fault-free measurement.
std::vector<RocPoint> roc_curve(std::span<const EpochSet> epochs,
                                std::span<const ThresholdRun> runs);

/// Trapezoidal area with (0,0) prepended and (1,1) appended.
double auc(std::span<const RocPoint> points);

/// Linear interpolation between order statistics; `pct` in [0, 100].
double percentile(std::vector<double> values, double pct);

struct ErrorMetricRecord {
  std::string trace_id;
  double p50_horizontal_m = 0.0;
  double p95_horizontal_m = 0.0;
  double combined = 0.0;
};

struct TraceErrors {
  std::string trace_id;
  std::vector<double> horizontal_errors_m;
};

struct ErrorMetricSummary {
  std::vector<ErrorMetricRecord> traces;
  double grand_mean = 0.0;
  /// Traces without any epoch carrying a truth position.
  std::vector<std::string> skipped;
};

ErrorMetricSummary horizontal_error_metric(std::span<const TraceErrors> traces);

/// Horizontal error of a WLS fix on the unflagged measurements; empty when
/// the epoch has no truth position or the fix is singular.
std::optional<double> post_fde_horizontal_error(const EpochSet& epoch, const FdeResult& result);

/// Per-trace horizontal errors, traces in order of first appearance.
std::vector<TraceErrors> collect_horizontal_errors(std::span<const EpochSet> epochs,
                                                   std::span<const FdeResult> results);

/// Errors with every measurement kept.
std::vector<TraceErrors> all_in_view_horizontal_errors(std::span<const EpochSet> epochs);

struct TimingRecord {
  FdeMethod method = FdeMethod::edm;
  std::size_t measurement_count = 0;
  std::size_t fault_count = 0;
  double wall_time_s = 0.0;
};

struct GroupStats {
  std::size_t key = 0;
  std::size_t count = 0;
  double mean_s = 0.0;
  /// Population standard deviation (0 for a single record).
  double std_s = 0.0;
};

struct TimingProfile {
  std::vector<TimingRecord> records;
  std::vector<GroupStats> by_measurements;
  std::vector<GroupStats> by_faults;
};

enum class TimingGroup { measurements, faults };

std::vector<GroupStats> group_timings(std::span<const TimingRecord> records, TimingGroup group);

/// Times each FDE call on a single thread, `repeats` times per epoch.
/// Fault counts come from truth labels.
TimingProfile timing_profile(FdeMethod method, std::span<const EpochSet> epochs, double threshold,
                             const MethodSettings& settings = {}, int repeats = 1);

using BigInt = boost::multiprecision::cpp_int;

BigInt edm_complexity(int m, int f);
BigInt residual_complexity(int m, int f, int k);
BigInt ss_complexity(int m, int f);

struct ComplexityPoint {
  int m = 0;
  BigInt edm;
  BigInt residual;
  BigInt ss;
};

/// Theoretical operation counts for m in [m_min, m_max]. Requires m > f >= 0
/// and 2 <= k <= 21.
std::vector<ComplexityPoint> complexity_curves(int m_min, int m_max, int f, int k = 10);

/// Grid point minimizing `metric`, lowest threshold on ties.
struct Calibration {
  double best_threshold = 0.0;
  std::size_t best_index = 0;
  std::vector<double> metric_values;
};

Calibration calibrate_threshold(std::span<const double> grid,
                                const std::function<double(double)>& metric);

/// n points evenly spaced in log10 between lo and hi, inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Threshold ranges tuned on real smartphone data: EDM 0.45..0.65,
/// legacy EDM 0.3..300, residual 10..1e5, all log spaced.
std::vector<double> default_threshold_grid(FdeMethod method);

/// Grids spanning each statistic's range on the simulated 10 m noise
/// scenarios, wide enough to trace a full ROC curve.
std::vector<double> simulation_threshold_grid(FdeMethod method);

}  // namespace edmfde::eval
