#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "edmfde/edm_fde.hpp"
#include "edmfde/types.hpp"

namespace edmfde {

/// Detection and exclusion thresholds on q = separation / sigma_delta.
struct FixedThresholds {
  double detection = 5.0;
  double exclusion = 5.0;
};

/// Integrity parameters a threshold rule is evaluated with.
struct ThresholdParams {
  double beta = 0.0;
  double p_hi = 0.0;
  double c_req = 0.0;
};

struct RuleThresholds {
  ThresholdParams params;
  std::function<FixedThresholds(const ThresholdParams&)> rule;
};

struct SsConfig {
  /// Largest fault hypothesis size f; must satisfy 1 <= f <= m - 6.
  int max_faults = 1;
  std::variant<FixedThresholds, RuleThresholds> thresholds = FixedThresholds{};
  /// Hard cap on the number of fault-hypothesis subsets.
  std::uint64_t subset_budget = 1'000'000;
};

FixedThresholds resolve_thresholds(const SsConfig& cfg);

struct SsSubsetRecord {
  std::vector<int> removed_indexes;
  Vec3 subset_position = Vec3::Zero();
  double separation = 0.0;
  double sigma_delta = 0.0;
  double statistic = 0.0;
};

/// trace((G^T G)^-1) with the 3-column geometry matrix at `rx_pos`.
/// Throws SingularGeometry.
double ss_normalizer(const PositionMatrix& sat_pos, const Vec3& rx_pos);

/// Sum over a = 1..f of C(m, a), saturating at UINT64_MAX.
std::uint64_t subset_count(int m, int f);

/// Index subsets of {0..m-1} with 1..f elements, sizes ascending and
/// lexicographic within a size.
class SubsetEnumerator {
 public:
  SubsetEnumerator(int m, int f);

  /// Advances to the next subset; false once exhausted.
  bool next();
  const std::vector<int>& current() const { return current_; }

 private:
  int m_;
  int f_;
  std::vector<int> current_;
};

/// All-in-view position, normalizer, and one record per evaluated subset.
/// Subsets with singular geometry are skipped.
struct SsEvaluation {
  Vec3 rx_pos = Vec3::Zero();
  double normalizer = 0.0;
  std::vector<SsSubsetRecord> records;
};

SsEvaluation evaluate_subsets(const PositionMatrix& sat_pos, const Vector& ranges,
                              const Vector& weights, int max_faults);

/// Combinatorial solution separation FDE. Returns no flags below 6
/// measurements. Throws BudgetExceeded when the hypothesis count exceeds
/// cfg.subset_budget.
FdeResult solution_separation_fde(const EpochSet& epoch, const SsConfig& cfg);

}  // namespace edmfde
