#pragma once

#include <optional>
#include <vector>

#include "edmfde/matrix_kernels.hpp"
#include "edmfde/types.hpp"

namespace edmfde {

using PositionMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Squared distances among the receiver (row/column 0) and the satellites.
struct EuclideanDistanceMatrix {
  SymMatrix entries;

  Eigen::Index dim() const { return entries.dim(); }
};

/// rho_m + b_rx - I + T - c_b, plus the satellite clock bias so the result
/// approximates the geometric range.
double condition_pseudorange(const Measurement& meas, double rx_clock_bias);

/// Conditioned ranges of every measurement, using the epoch's receiver
/// clock estimate (0 when absent).
Vector conditioned_ranges(const EpochSet& epoch);

/// Satellite positions as an m x 3 matrix in measurement order.
PositionMatrix satellite_positions(const EpochSet& epoch);

/// EDM from explicit positions and receiver ranges; any m >= 1.
EuclideanDistanceMatrix build_edm(const PositionMatrix& sat_pos, const Vector& ranges);

/// EDM of an epoch. Throws TooFewMeasurements below 4 measurements.
EuclideanDistanceMatrix build_edm(const EpochSet& epoch);

/// Double-centered Gram matrix -1/2 J D J with J = I - 11^T / dim(D).
SymMatrix gram_from_edm(const EuclideanDistanceMatrix& edm);

/// How the greedy loop obtains the Gram spectrum.
enum class EigenRoute {
  /// Jacobi on the full (m+1) x (m+1) Gram matrix.
  dense,
  /// Gram = B M B^T with B of width 5, so only a 5 x 5 core is diagonalized.
  /// Yields the same nonzero eigenpairs; the rest are exactly zero.
  low_rank,
};

/// Spectrum of the Gram matrix for the given satellites and ranges.
Spectrum gram_spectrum(const PositionMatrix& sat_pos, const Vector& ranges,
                       EigenRoute route = EigenRoute::low_rank);

/// (|l_{n+1}| + |l_{n+2}|) / (2 |l_1|). Throws InsufficientDimension when
/// the spectrum has fewer than n+2 eigenvalues.
double detection_statistic(const Spectrum& spectrum, int n = 3);

/// Legacy statistic: |l_{n+1}| * mean(|l_{n+1}|..|l_m|) / |l_1|.
double detection_statistic_2021(const Spectrum& spectrum, int n, int m);

/// Satellite rows (1..dim-1) sorted by the mean of |q_{n+1}| and |q_{n+2}|,
/// highest first, lowest row first on ties. Row 0 is the receiver.
std::vector<Eigen::Index> exclusion_ranking(const Spectrum& spectrum, int n = 3);

/// First entry of exclusion_ranking.
Eigen::Index exclusion_candidate(const Spectrum& spectrum, int n = 3);

enum class EdmStatistic { current, legacy2021 };

struct EdmFdeOptions {
  std::optional<int> max_faults;
  int removals_per_iter = 1;
  int dimension = 3;
  EdmStatistic statistic = EdmStatistic::current;
  EigenRoute route = EigenRoute::low_rank;
};

/// Greedy EDM fault detection and exclusion.
///
/// Repeats detection on the remaining satellites, removing the top exclusion
/// candidates while more than four satellites remain and the statistic is at
/// or above `threshold`.
FdeResult greedy_edm_fde(const EpochSet& epoch, double threshold,
                         const EdmFdeOptions& opts = {});

}  // namespace edmfde
