#pragma once

#include <optional>

#include "edmfde/edm_fde.hpp"
#include "edmfde/matrix_kernels.hpp"
#include "edmfde/types.hpp"

namespace edmfde {

struct WlsState {
  Vec3 position = Vec3::Zero();
  double clock_bias = 0.0;
};

struct WlsSolution {
  Vec3 rx_pos = Vec3::Zero();
  double rx_clock_bias = 0.0;
  int iterations = 0;
  bool converged = false;
  /// rho - ||X_r - X_sv|| - b_rx per measurement.
  Vector residuals;
};

struct WlsSettings {
  int max_iterations = 20;
  /// Converged once the state update norm drops below this (meters).
  double step_tolerance = 1e-4;
};

/// Gauss-Newton on (x, y, z, b) minimizing weighted pseudorange residuals.
/// Starts at `init` (ECEF origin with zero clock when absent). Throws
/// SingularGeometry from the normal solve.
WlsSolution wls_solve(const PositionMatrix& sat_pos, const Vector& ranges, const Vector& weights,
                      std::optional<WlsState> init = {}, const WlsSettings& settings = {});

/// Same, on an epoch's conditioned pseudoranges and weights.
WlsSolution wls_solve(const EpochSet& epoch, std::optional<WlsState> init = {},
                      const WlsSettings& settings = {});

Vector measurement_weights(const EpochSet& epoch);

/// Unit line-of-sight rows (X_r - X_sv) / ||X_r - X_sv||, m x 3.
PositionMatrix geometry_matrix(const Vec3& rx_pos, const PositionMatrix& sat_pos);

/// R^T (W - W G (G^T W G)^-1 G^T W) R with the 3-column geometry matrix.
double chi_square_statistic(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                            const Vector& residuals, const Vector& weights);

/// w_i (r_i - g_i^T x)^2 / (1 - w_i g_i^T (G^T W G)^-1 g_i) per measurement,
/// with x = (G^T W G)^-1 G^T W R. Entries whose denominator is at or below
/// 1e-12 are NaN.
Vector normalized_residuals(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                            const Vector& residuals, const Vector& weights);

/// Index of the largest normalized residual, lowest index on ties.
std::size_t largest_normalized_residual(const Vec3& rx_pos, const PositionMatrix& sat_pos,
                                        const Vector& residuals, const Vector& weights);

struct ResidualFdeOptions {
  std::optional<int> max_faults;
  WlsSettings wls;
};

/// Greedy residual FDE: solve, test chi-square, drop the largest normalized
/// residual while chi-square exceeds `threshold` and more than four
/// measurements remain.
FdeResult greedy_residual_fde(const EpochSet& epoch, double threshold,
                              const ResidualFdeOptions& opts = {});

}  // namespace edmfde
