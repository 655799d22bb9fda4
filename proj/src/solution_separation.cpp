#include "edmfde/solution_separation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "edmfde/errors.hpp"
#include "edmfde/residual_fde.hpp"

namespace edmfde {

FixedThresholds resolve_thresholds(const SsConfig& cfg) {
  if (const auto* fixed = std::get_if<FixedThresholds>(&cfg.thresholds)) return *fixed;
  const auto& rule = std::get<RuleThresholds>(cfg.thresholds);
  if (!rule.rule) throw std::invalid_argument("threshold rule is empty");
  return rule.rule(rule.params);
}

double ss_normalizer(const PositionMatrix& sat_pos, const Vec3& rx_pos) {
  if (sat_pos.rows() < 3) throw SingularGeometry("normalizer needs at least 3 satellites");
  const PositionMatrix g = geometry_matrix(rx_pos, sat_pos);
  return spd_inverse(g.transpose() * g).trace();
}

std::uint64_t subset_count(int m, int f) {
  using boost::multiprecision::cpp_int;
  const cpp_int cap = std::numeric_limits<std::uint64_t>::max();
  cpp_int total = 0;
  cpp_int binom = 1;
  for (int a = 1; a <= f && a <= m; ++a) {
    binom = binom * (m - a + 1) / a;
    total += binom;
    if (total > cap) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(total);
}

SubsetEnumerator::SubsetEnumerator(int m, int f) : m_(m), f_(f) {
  if (f < 1 || f >= m) throw std::invalid_argument("subset enumeration needs 1 <= f < m");
}

bool SubsetEnumerator::next() {
  if (current_.empty()) {
    current_ = {0};
    return true;
  }
  const int k = static_cast<int>(current_.size());
  for (int i = k - 1; i >= 0; --i) {
    if (current_[static_cast<std::size_t>(i)] < m_ - k + i) {
      ++current_[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) {
        current_[static_cast<std::size_t>(j)] = current_[static_cast<std::size_t>(j - 1)] + 1;
      }
      return true;
    }
  }
  if (k >= f_) return false;
  current_.resize(static_cast<std::size_t>(k + 1));
  std::iota(current_.begin(), current_.end(), 0);
  return true;
}

namespace {

struct Subproblem {
  PositionMatrix pos;
  Vector ranges;
  Vector weights;
};

Subproblem remove_rows(const PositionMatrix& pos, const Vector& ranges, const Vector& weights,
                       const std::vector<int>& removed) {
  const Eigen::Index m = pos.rows();
  const auto keep = m - static_cast<Eigen::Index>(removed.size());
  Subproblem out{PositionMatrix(keep, 3), Vector(keep), Vector(keep)};
  Eigen::Index row = 0;
  std::size_t next_removed = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (next_removed < removed.size() && removed[next_removed] == i) {
      ++next_removed;
      continue;
    }
    out.pos.row(row) = pos.row(i);
    out.ranges(row) = ranges(i);
    out.weights(row) = weights(i);
    ++row;
  }
  return out;
}

// True when no hypothesis of up to `max_faults` removals on this set reaches
// `threshold`.
bool is_consistent(const Subproblem& set, int max_faults, double threshold) {
  const auto m = static_cast<int>(set.pos.rows());
  if (m < 6) return false;
  const int f = std::clamp(max_faults, 1, m - 1);
  SsEvaluation eval;
  try {
    eval = evaluate_subsets(set.pos, set.ranges, set.weights, f);
  } catch (const SingularGeometry&) {
    return false;
  }
  return std::all_of(eval.records.begin(), eval.records.end(),
                     [&](const SsSubsetRecord& r) { return r.statistic < threshold; });
}

}  // namespace

SsEvaluation evaluate_subsets(const PositionMatrix& sat_pos, const Vector& ranges,
                              const Vector& weights, int max_faults) {
  SsEvaluation out;
  const WlsSolution all_in_view = wls_solve(sat_pos, ranges, weights);
  out.rx_pos = all_in_view.rx_pos;
  out.normalizer = ss_normalizer(sat_pos, out.rx_pos);

  const auto m = static_cast<int>(sat_pos.rows());
  SubsetEnumerator subsets(m, max_faults);
  while (subsets.next()) {
    const std::vector<int>& removed = subsets.current();
    if (m - static_cast<int>(removed.size()) < 4) continue;
    const Subproblem sub = remove_rows(sat_pos, ranges, weights, removed);
    SsSubsetRecord record;
    record.removed_indexes = removed;
    try {
      record.subset_position = wls_solve(sub.pos, sub.ranges, sub.weights).rx_pos;
      const double sigma_sq = ss_normalizer(sub.pos, out.rx_pos);
      const double variance = sigma_sq - out.normalizer;
      if (!(variance > 0.0)) continue;
      record.separation = (out.rx_pos - record.subset_position).norm();
      record.sigma_delta = std::sqrt(variance);
      record.statistic = record.separation / record.sigma_delta;
    } catch (const SingularGeometry&) {
      continue;
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

FdeResult solution_separation_fde(const EpochSet& epoch, const SsConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  FdeResult result;
  result.method = FdeMethod::ss;
  result.flags.assign(epoch.size(), false);
  for (const Measurement& m : epoch.measurements) result.sv_ids.push_back(m.sv_id);

  const auto m = static_cast<int>(epoch.size());
  auto finish = [&] {
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };
  if (m < 6) return finish();
  if (cfg.max_faults < 1 || cfg.max_faults > m - 6) {
    throw std::invalid_argument("solution separation needs 1 <= max_faults <= m - 6");
  }
  if (subset_count(m, cfg.max_faults) > cfg.subset_budget) {
    throw BudgetExceeded("solution separation would evaluate " +
                         std::to_string(subset_count(m, cfg.max_faults)) + " subsets");
  }
  const FixedThresholds thresholds = resolve_thresholds(cfg);

  const PositionMatrix pos = satellite_positions(epoch);
  const Vector ranges = conditioned_ranges(epoch);
  const Vector weights = measurement_weights(epoch);

  SsEvaluation eval;
  try {
    eval = evaluate_subsets(pos, ranges, weights, cfg.max_faults);
  } catch (const SingularGeometry&) {
    result.converged = false;
    return finish();
  }

  double max_statistic = 0.0;
  std::vector<const SsSubsetRecord*> candidates;
  for (const SsSubsetRecord& r : eval.records) {
    max_statistic = std::max(max_statistic, r.statistic);
    if (r.statistic > thresholds.detection) candidates.push_back(&r);
  }
  result.statistic_trace.push_back(max_statistic);
  if (candidates.empty()) return finish();

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SsSubsetRecord* a, const SsSubsetRecord* b) {
                     if (a->removed_indexes.size() != b->removed_indexes.size()) {
                       return a->removed_indexes.size() < b->removed_indexes.size();
                     }
                     return a->statistic > b->statistic;
                   });

  for (const SsSubsetRecord* candidate : candidates) {
    const int remaining_faults =
        std::max(1, cfg.max_faults - static_cast<int>(candidate->removed_indexes.size()));
    const Subproblem reduced = remove_rows(pos, ranges, weights, candidate->removed_indexes);
    if (!is_consistent(reduced, remaining_faults, thresholds.exclusion)) continue;
    for (int index : candidate->removed_indexes) {
      result.flags[static_cast<std::size_t>(index)] = true;
      result.exclusion_order.push_back(epoch.measurements[static_cast<std::size_t>(index)].sv_id);
    }
    result.statistic_trace.push_back(candidate->statistic);
    break;
  }
  return finish();
}

}  // namespace edmfde
