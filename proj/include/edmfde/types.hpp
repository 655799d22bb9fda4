#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edmfde/matrix_kernels.hpp"

namespace edmfde {

/// One pseudorange with the satellite state needed to condition it.
/// Distances are meters, weight is 1/m^2.
struct Measurement {
  std::string sv_id;
  std::string constellation;
  Vec3 sat_pos = Vec3::Zero();
  double sat_clock_bias = 0.0;
  double pseudorange_raw = 0.0;
  double iono_delay = 0.0;
  double tropo_delay = 0.0;
  double constellation_bias = 0.0;
  double weight = 1.0;
  std::optional<bool> multipath;
  std::optional<bool> truth_fault;
};

/// All measurements sharing one timestamp within one trace.
struct EpochSet {
  std::string trace_id;
  double timestamp = 0.0;
  std::vector<Measurement> measurements;
  std::optional<double> rx_clock_bias_est;
  std::optional<Vec3> truth_rx_pos;

  std::size_t size() const { return measurements.size(); }
  /// Number of measurements labelled faulty.
  std::size_t truth_fault_count() const;
  bool has_truth_labels() const;
};

/// Throws std::invalid_argument on duplicate sv_id, non-positive
/// pseudorange or weight, or a satellite outside the 2e7..5e7 m shell.
void validate(const EpochSet& epoch);

/// Copy of `epoch` without the measurements whose index is set in `drop`.
EpochSet without(const EpochSet& epoch, const std::vector<bool>& drop);

enum class FdeMethod { edm, edm2021, residual, ss };

std::string_view to_string(FdeMethod method);
/// Throws std::invalid_argument on an unknown name.
FdeMethod parse_method(std::string_view name);

/// Output of every FDE method. `flags` and `sv_ids` follow the input
/// measurement order.
struct FdeResult {
  FdeMethod method = FdeMethod::edm;
  std::vector<std::string> sv_ids;
  std::vector<bool> flags;
  std::vector<std::string> exclusion_order;
  std::vector<double> statistic_trace;
  double wall_time_s = 0.0;
  /// False when an estimator failed (singular geometry) and exclusion stopped.
  bool converged = true;

  std::size_t flagged_count() const;
  /// 1-based position of `sv_id` in exclusion_order, 0 when not excluded.
  std::size_t exclusion_rank(std::string_view sv_id) const;
};

}  // namespace edmfde
