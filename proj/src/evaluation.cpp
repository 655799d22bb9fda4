#include "edmfde/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "edmfde/errors.hpp"
#include "edmfde/geodesy.hpp"

namespace edmfde::eval {

FdeResult run_fde(const EpochSet& epoch, FdeMethod method, double threshold,
                  const MethodSettings& settings) {
  switch (method) {
    case FdeMethod::edm: {
      EdmFdeOptions opts = settings.edm;
      opts.statistic = EdmStatistic::current;
      return greedy_edm_fde(epoch, threshold, opts);
    }
    case FdeMethod::edm2021: {
      EdmFdeOptions opts = settings.edm;
      opts.statistic = EdmStatistic::legacy2021;
      return greedy_edm_fde(epoch, threshold, opts);
    }
    case FdeMethod::residual:
      return greedy_residual_fde(epoch, threshold, settings.residual);
    case FdeMethod::ss: {
      SsConfig cfg = settings.ss;
      cfg.thresholds = FixedThresholds{threshold, threshold};
      return solution_separation_fde(epoch, cfg);
    }
  }
  throw std::invalid_argument("unknown FDE method");
}

std::vector<ThresholdRun> sweep(std::span<const EpochSet> epochs, FdeMethod method,
                                std::span<const double> grid, const MethodSettings& settings,
                                unsigned workers) {
  std::vector<ThresholdRun> runs(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    runs[g].threshold = grid[g];
    runs[g].results.resize(epochs.size());
  }
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        runs[g].results[e] = run_fde(epochs[e], method, grid[g], settings);
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(epochs.size())));
  if (workers <= 1) {
    work(0, epochs.size());
    return runs;
  }
  std::vector<std::jthread> threads;
  const std::size_t chunk = (epochs.size() + workers - 1) / workers;
  for (std::size_t begin = 0; begin < epochs.size(); begin += chunk) {
    threads.emplace_back(work, begin, std::min(begin + chunk, epochs.size()));
  }
  return runs;
}

std::vector<RocPoint> roc_curve(std::span<const EpochSet> epochs,
                                std::span<const ThresholdRun> runs) {
  std::size_t faulty = 0;
  std::size_t fault_free = 0;
  for (const EpochSet& epoch : epochs) {
    if (!epoch.has_truth_labels()) {
      throw std::invalid_argument("ROC needs truth labels on every measurement");
    }
    const std::size_t f = epoch.truth_fault_count();
    faulty += f;
    fault_free += epoch.size() - f;
  }
  if (faulty == 0) throw UndefinedRate("no faulty measurements in the pool");
  if (fault_free == 0) throw UndefinedRate("no fault-free measurements in the pool");

  std::vector<RocPoint> points;
  for (const ThresholdRun& run : runs) {
    if (run.results.size() != epochs.size()) {
      throw std::invalid_argument("threshold run does not match the epoch list");
    }
    std::size_t hits = 0;
    std::size_t false_alarms = 0;
    for (std::size_t e = 0; e < epochs.size(); ++e) {
      const auto& meas = epochs[e].measurements;
      const auto& flags = run.results[e].flags;
      for (std::size_t i = 0; i < meas.size(); ++i) {
        if (!flags[i]) continue;
        if (*meas[i].truth_fault) {
          ++hits;
        } else {
          ++false_alarms;
        }
      }
    }
    points.push_back({run.threshold, static_cast<double>(hits) / static_cast<double>(faulty),
                      static_cast<double>(false_alarms) / static_cast<double>(fault_free)});
  }
  std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.false_alarm_rate != b.false_alarm_rate) return a.false_alarm_rate < b.false_alarm_rate;
    return a.true_positive_rate < b.true_positive_rate;
  });
  return points;
}

double auc(std::span<const RocPoint> points) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(points.size() + 2);
  curve.emplace_back(0.0, 0.0);
  for (const RocPoint& p : points) curve.emplace_back(p.false_alarm_rate, p.true_positive_rate);
  curve.emplace_back(1.0, 1.0);
  std::stable_sort(curve.begin(), curve.end());
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].first - curve[i - 1].first) * 0.5 * (curve[i].second + curve[i - 1].second);
  }
  return std::clamp(area, 0.0, 1.0);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ErrorMetricSummary horizontal_error_metric(std::span<const TraceErrors> traces) {
  ErrorMetricSummary out;
  double total = 0.0;
  for (const TraceErrors& trace : traces) {
    if (trace.horizontal_errors_m.empty()) {
      out.skipped.push_back(trace.trace_id);
      continue;
    }
    ErrorMetricRecord rec;
    rec.trace_id = trace.trace_id;
    rec.p50_horizontal_m = percentile(trace.horizontal_errors_m, 50.0);
    rec.p95_horizontal_m = percentile(trace.horizontal_errors_m, 95.0);
    rec.combined = 0.5 * (rec.p50_horizontal_m + rec.p95_horizontal_m);
    total += rec.combined;
    out.traces.push_back(std::move(rec));
  }
  if (!out.traces.empty()) out.grand_mean = total / static_cast<double>(out.traces.size());
  return out;
}

std::optional<double> post_fde_horizontal_error(const EpochSet& epoch, const FdeResult& result) {
  if (!epoch.truth_rx_pos) return std::nullopt;
  const EpochSet kept = without(epoch, result.flags);
  if (kept.size() < 4) return std::nullopt;
  try {
    const WlsSolution sol = wls_solve(kept);
    return geodesy::horizontal_error(sol.rx_pos, *epoch.truth_rx_pos);
  } catch (const SingularGeometry&) {
    return std::nullopt;
  }
}

std::vector<TraceErrors> collect_horizontal_errors(std::span<const EpochSet> epochs,
                                                   std::span<const FdeResult> results) {
  if (epochs.size() != results.size()) {
    throw std::invalid_argument("results do not match the epoch list");
  }
  std::vector<TraceErrors> traces;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    auto [it, inserted] = index.try_emplace(epochs[e].trace_id, traces.size());
    if (inserted) traces.push_back({epochs[e].trace_id, {}});
    if (auto err = post_fde_horizontal_error(epochs[e], results[e])) {
      traces[it->second].horizontal_errors_m.push_back(*err);
    }
  }
  return traces;
}

std::vector<TraceErrors> all_in_view_horizontal_errors(std::span<const EpochSet> epochs) {
  std::vector<FdeResult> keep_all(epochs.size());
  for (std::size_t e = 0; e < epochs.size(); ++e) keep_all[e].flags.assign(epochs[e].size(), false);
  return collect_horizontal_errors(epochs, keep_all);
}

std::vector<GroupStats> group_timings(std::span<const TimingRecord> records, TimingGroup group) {
  std::map<std::size_t, std::vector<double>> buckets;
  for (const TimingRecord& r : records) {
    const std::size_t key =
        group == TimingGroup::measurements ? r.measurement_count : r.fault_count;
    buckets[key].push_back(r.wall_time_s);
  }
  std::vector<GroupStats> out;
  for (const auto& [key, times] : buckets) {
    GroupStats s;
    s.key = key;
    s.count = times.size();
    double sum = 0.0;
    for (double t : times) sum += t;
    s.mean_s = sum / static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times) var += (t - s.mean_s) * (t - s.mean_s);
    s.std_s = std::sqrt(var / static_cast<double>(times.size()));
    out.push_back(s);
  }
  return out;
}

TimingProfile timing_profile(FdeMethod method, std::span<const EpochSet> epochs, double threshold,
                             const MethodSettings& settings, int repeats) {
  TimingProfile profile;
  for (int rep = 0; rep < repeats; ++rep) {
    for (const EpochSet& epoch : epochs) {
      const FdeResult result = run_fde(epoch, method, threshold, settings);
      profile.records.push_back(
          {method, epoch.size(), epoch.truth_fault_count(), result.wall_time_s});
    }
  }
  profile.by_measurements = group_timings(profile.records, TimingGroup::measurements);
  profile.by_faults = group_timings(profile.records, TimingGroup::faults);
  return profile;
}

namespace {

BigInt cube(long long v) {
  const BigInt b = v;
  return b * b * b;
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// 1 + sum_{a=1..f} C(n, a)
BigInt hypothesis_count(int n, int f) {
  BigInt out = 1;
  for (int a = 1; a <= f; ++a) out += binomial(n, a);
  return out;
}

void check_complexity_args(int m, int f) {
  if (f < 0 || m <= f) throw std::invalid_argument("complexity needs m > f >= 0");
}

}  // namespace

BigInt edm_complexity(int m, int f) {
  check_complexity_args(m, f);
  BigInt out = 0;
  for (int a = 0; a <= f; ++a) out += cube(m + 1 - a);
  return out;
}

BigInt residual_complexity(int m, int f, int k) {
  check_complexity_args(m, f);
  if (k < 2 || k > 21) throw std::invalid_argument("k must lie in [2, 21]");
  BigInt out = 0;
  for (int a = 0; a <= f; ++a) out += k * cube(m - a);
  return out;
}

BigInt ss_complexity(int m, int f) {
  check_complexity_args(m, f);
  return cube(m) * hypothesis_count(m, f) + cube(m - 1) * hypothesis_count(m - 1, f - 1);
}

std::vector<ComplexityPoint> complexity_curves(int m_min, int m_max, int f, int k) {
  if (m_min > m_max) throw std::invalid_argument("empty measurement range");
  std::vector<ComplexityPoint> out;
  for (int m = m_min; m <= m_max; ++m) {
    out.push_back({m, edm_complexity(m, f), residual_complexity(m, f, k), ss_complexity(m, f)});
  }
  return out;
}

Calibration calibrate_threshold(std::span<const double> grid,
                                const std::function<double(double)>& metric) {
  if (grid.size() < 2) throw std::invalid_argument("calibration needs at least 2 grid points");
  Calibration out;
  for (double t : grid) out.metric_values.push_back(metric(t));
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = out.metric_values[i];
    const double b = out.metric_values[best];
    if (v < b || (v == b && grid[i] < grid[best])) best = i;
  }
  out.best_index = best;
  out.best_threshold = grid[best];
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 2) {
    throw std::invalid_argument("log grid needs 0 < lo <= hi and n >= 2");
  }
  std::vector<double> out(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> default_threshold_grid(FdeMethod method) {
  switch (method) {
    case FdeMethod::edm: return log_grid(0.45, 0.65, 17);
    case FdeMethod::edm2021: return log_grid(0.3, 300.0, 31);
    case FdeMethod::residual: return log_grid(10.0, 1e5, 41);
    case FdeMethod::ss: return log_grid(1.0, 1e3, 31);
  }
  throw std::invalid_argument("unknown FDE method");
}

std::vector<double> simulation_threshold_grid(FdeMethod method) {
  switch (method) {
    case FdeMethod::edm: return log_grid(1e-8, 1e-5, 31);
    case FdeMethod::edm2021: return log_grid(1e-14, 1e-6, 41);
    case FdeMethod::residual: return log_grid(1.0, 1e4, 33);
    case FdeMethod::ss: return log_grid(1.0, 1e3, 31);
  }
  throw std::invalid_argument("unknown FDE method");
}

}  // namespace edmfde::eval
