#include "edmfde/residual_fde.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "edmfde/errors.hpp"

namespace edmfde {

WlsSolution wls_solve(const PositionMatrix& sat_pos, const Vector& ranges, const Vector& weights,
                      std::optional<WlsState> init, const WlsSettings& settings) {
  const Eigen::Index m = sat_pos.rows();
  if (ranges.size() != m || weights.size() != m) {
    throw std::invalid_argument("wls_solve: input lengths differ");
  }
  if (m < 4) throw TooFewMeasurements("WLS needs at least 4 measurements");

  const WlsState start = init.value_or(WlsState{});
  Eigen::Vector4d state;
  state << start.position, start.clock_bias;

  WlsSolution sol;
  Matrix jacobian(m, 4);
  Vector innovation(m);
  for (int it = 1; it <= settings.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec3 diff = state.head<3>() - sat_pos.row(i).transpose();
      const double range = diff.norm();
      jacobian.block<1, 3>(i, 0) = (diff / range).transpose();
      jacobian(i, 3) = 1.0;
      innovation(i) = ranges(i) - range - state(3);
    }
    const Vector step = weighted_normal_solve(jacobian, weights, innovation);
    state += step;
    sol.iterations = it;
    if (step.norm() < settings.step_tolerance) {
      sol.converged = true;
      break;
    }
  }

  sol.rx_pos = state.head<3>();
  sol.rx_clock_bias = state(3);
  sol.residuals.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    sol.residuals(i) = ranges(i) - (sol.rx_pos - sat_pos.row(i).transpose()).norm() - sol.rx_clock_bias;
  }
  return sol;
}

Vector measurement_weights(const EpochSet& epoch) {
  Vector w(static_cast<Eigen::Index>(epoch.size()));
  for (std::size_t i = 0; i < epoch.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = epoch.measurements[i].weight;
  }
  return w;
}

WlsSolution wls_solve(const EpochSet& epoch, std::optional<WlsState> init,
                      const WlsSettings& settings) {
  return wls_solve(satellite_positions(epoch), conditioned_ranges(epoch),
                   measurement_weights(epoch), init, settings);
}

PositionMatrix geometry_matrix(const Vec3& rx_pos, const PositionMatrix& sat_pos) {
  PositionMatrix g(sat_pos.rows(), 3);
  for (Eigen::Index i = 0; i < sat_pos.rows(); ++i) {
    const Vec3 diff = rx_pos - sat_pos.row(i).transpose();
    g.row(i) = (diff / diff.norm()).transpose();
  }
  return g;
}

namespace {

void check_lengths(const PositionMatrix& sat_pos, const Vector& residuals, const Vector& weights) {
  if (residuals.size() != sat_pos.rows() || weights.size() != sat_pos.rows()) {
    throw std::invalid_argument("residual inputs differ in length");
  }
}

}  // namespace

double chi_square_statistic(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                            const Vector& residuals, const Vector& weights) {
  check_lengths(sat_pos, residuals, weights);
  const PositionMatrix g = geometry_matrix(rx_pos, sat_pos);
  const Vector wr = weights.cwiseProduct(residuals);
  const Matrix normal_inv = spd_inverse(g.transpose() * weights.asDiagonal() * g);
  const Vec3 gwr = g.transpose() * wr;
  return residuals.dot(wr) - gwr.dot(normal_inv * gwr);
}

Vector normalized_residuals(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                            const Vector& residuals, const Vector& weights) {
  check_lengths(sat_pos, residuals, weights);
  const PositionMatrix g = geometry_matrix(rx_pos, sat_pos);
  const Matrix normal_inv = spd_inverse(g.transpose() * weights.asDiagonal() * g);
  const Vec3 fitted = normal_inv * (g.transpose() * weights.cwiseProduct(residuals));

  Vector out(sat_pos.rows());
  for (Eigen::Index i = 0; i < sat_pos.rows(); ++i) {
    const Vec3 gi = g.row(i).transpose();
    const double denom = 1.0 - weights(i) * gi.dot(normal_inv * gi);
    if (denom <= 1e-12) {
      out(i) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double e = residuals(i) - gi.dot(fitted);
    out(i) = weights(i) * e * e / denom;
  }
  return out;
}

std::size_t largest_normalized_residual(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                                        const Vector& residuals, const Vector& weights) {
  if (sat_pos.rows() < 5) {
    throw TooFewMeasurements("normalized residual exclusion needs at least 5 measurements");
  }
  const Vector scores = normalized_residuals(rx_pos, sat_pos, residuals, weights);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores(i))) continue;
    if (scores(i) > best_score) {
      best_score = scores(i);
      best = static_cast<std::size_t>(i);
    }
  }
  if (best_score == -std::numeric_limits<double>::infinity()) {
    throw SingularGeometry("every measurement has leverage close to one");
  }
  return best;
}

FdeResult greedy_residual_fde(const EpochSet& epoch, double threshold,
                              const ResidualFdeOptions& opts) {
  if (epoch.size() < 4) {
    throw TooFewMeasurements("greedy residual FDE needs at least 4 measurements, got " +
                             std::to_string(epoch.size()));
  }
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");

  const auto start = std::chrono::steady_clock::now();

  FdeResult result;
  result.method = FdeMethod::residual;
  result.flags.assign(epoch.size(), false);
  for (const Measurement& m : epoch.measurements) result.sv_ids.push_back(m.sv_id);

  const PositionMatrix all_pos = satellite_positions(epoch);
  const Vector all_ranges = conditioned_ranges(epoch);
  const Vector all_weights = measurement_weights(epoch);
  std::vector<Eigen::Index> active(epoch.size());
  std::iota(active.begin(), active.end(), Eigen::Index{0});
  const int fault_cap = opts.max_faults.value_or(static_cast<int>(epoch.size()));

  PositionMatrix pos;
  Vector ranges;
  Vector weights;
  auto gather = [&] {
    const auto count = static_cast<Eigen::Index>(active.size());
    pos.resize(count, 3);
    ranges.resize(count);
    weights.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index src = active[static_cast<std::size_t>(i)];
      pos.row(i) = all_pos.row(src);
      ranges(i) = all_ranges(src);
      weights(i) = all_weights(src);
    }
  };

  try {
    gather();
    WlsSolution sol = wls_solve(pos, ranges, weights, std::nullopt, opts.wls);
    double chi2 = chi_square_statistic(sol.rx_pos, pos, sol.residuals, weights);
    result.statistic_trace.push_back(chi2);
    result.converged = sol.converged;

    while (chi2 > threshold && active.size() > 4 &&
           static_cast<int>(result.exclusion_order.size()) < fault_cap) {
      const std::size_t worst = largest_normalized_residual(sol.rx_pos, pos, sol.residuals, weights);
      const auto original = static_cast<std::size_t>(active[worst]);
      result.flags[original] = true;
      result.exclusion_order.push_back(epoch.measurements[original].sv_id);
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));

      gather();
      sol = wls_solve(pos, ranges, weights, std::nullopt, opts.wls);
      chi2 = chi_square_statistic(sol.rx_pos, pos, sol.residuals, weights);
      result.statistic_trace.push_back(chi2);
      result.converged = sol.converged;
    }
  } catch (const SingularGeometry&) {
    result.converged = false;
  }

  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace edmfde
