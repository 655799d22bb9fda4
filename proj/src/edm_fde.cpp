#include "edmfde/edm_fde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "edmfde/errors.hpp"

namespace edmfde {

double condition_pseudorange(const Measurement& meas, double rx_clock_bias) {
  return meas.pseudorange_raw + rx_clock_bias - meas.iono_delay + meas.tropo_delay -
         meas.constellation_bias + meas.sat_clock_bias;
}

Vector conditioned_ranges(const EpochSet& epoch) {
  const double clock = epoch.rx_clock_bias_est.value_or(0.0);
  Vector out(static_cast<Eigen::Index>(epoch.size()));
  for (std::size_t i = 0; i < epoch.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = condition_pseudorange(epoch.measurements[i], clock);
  }
  return out;
}

PositionMatrix satellite_positions(const EpochSet& epoch) {
  PositionMatrix out(static_cast<Eigen::Index>(epoch.size()), 3);
  for (std::size_t i = 0; i < epoch.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = epoch.measurements[i].sat_pos.transpose();
  }
  return out;
}

EuclideanDistanceMatrix build_edm(const PositionMatrix& sat_pos, const Vector& ranges) {
  if (sat_pos.rows() != ranges.size()) {
    throw std::invalid_argument("build_edm: positions and ranges differ in length");
  }
  const Eigen::Index m = sat_pos.rows();
  Matrix d = Matrix::Zero(m + 1, m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    d(i + 1, 0) = ranges(i) * ranges(i);
    for (Eigen::Index j = 0; j < i; ++j) {
      d(i + 1, j + 1) = (sat_pos.row(i) - sat_pos.row(j)).squaredNorm();
    }
  }
  return {SymMatrix::from_lower(d)};
}

EuclideanDistanceMatrix build_edm(const EpochSet& epoch) {
  if (epoch.size() < 4) {
    throw TooFewMeasurements("EDM needs at least 4 measurements, got " +
                             std::to_string(epoch.size()));
  }
  return build_edm(satellite_positions(epoch), conditioned_ranges(epoch));
}

SymMatrix gram_from_edm(const EuclideanDistanceMatrix& edm) {
  const Matrix& d = edm.entries.entries();
  const Eigen::Index n = d.rows();
  const Vector row_mean = d.rowwise().mean();
  const double grand_mean = row_mean.mean();
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      g(i, j) = -0.5 * (d(i, j) - row_mean(i) - row_mean(j) + grand_mean);
    }
  }
  return SymMatrix::from_lower(g);
}

namespace {

Spectrum dense_spectrum(const PositionMatrix& sat_pos, const Vector& ranges) {
  return sym_eig(gram_from_edm(build_edm(sat_pos, ranges)));
}

// With the receiver placed at the satellite centroid x0, the EDM splits into
// a consistent part plus a correction confined to row/column 0:
//   D = a 1^T + 1 a^T - 2 X X^T + e0 d^T + d e0^T,
// so G = -1/2 J D J = B M B^T with B = J [X e0 d] and
// M = diag(I3, [[0, -1/2], [-1/2, 0]]). A thin QR of B reduces the problem to
// the 5 x 5 core R M R^T.
std::optional<Spectrum> low_rank_spectrum(const PositionMatrix& sat_pos, const Vector& ranges) {
  const Eigen::Index m = sat_pos.rows();
  const Eigen::Index n = m + 1;
  constexpr Eigen::Index kWidth = 5;
  if (n <= kWidth) return std::nullopt;

  using Basis = Eigen::Matrix<double, Eigen::Dynamic, kWidth>;
  using Core = Eigen::Matrix<double, kWidth, kWidth>;

  const Eigen::RowVector3d centroid = sat_pos.colwise().mean();
  Basis b = Basis::Zero(n, kWidth);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::RowVector3d rel = sat_pos.row(i) - centroid;
    b.block<1, 3>(i + 1, 0) = rel;
    b(i + 1, 4) = ranges(i) * ranges(i) - rel.squaredNorm();
  }
  b(0, 3) = 1.0;
  b.rowwise() -= b.colwise().mean();

  Basis q(n, kWidth);
  Core r = Core::Zero();
  for (Eigen::Index j = 0; j < kWidth; ++j) {
    Vector v = b.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double proj = q.col(i).dot(v);
        v -= proj * q.col(i);
        r(i, j) += proj;
      }
      v.array() -= v.mean();
    }
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return std::nullopt;
    r(j, j) = norm;
    q.col(j) = v / norm;
  }

  Core core_weights = Core::Zero();
  core_weights.topLeftCorner<3, 3>().setIdentity();
  core_weights(3, 4) = -0.5;
  core_weights(4, 3) = -0.5;
  const Matrix core = r * core_weights * r.transpose();

  Spectrum small = sym_eig(SymMatrix::from_lower(core));
  return Spectrum{std::move(small.values), q * small.vectors};
}

}  // namespace

Spectrum gram_spectrum(const PositionMatrix& sat_pos, const Vector& ranges, EigenRoute route) {
  if (route == EigenRoute::low_rank) {
    if (auto spec = low_rank_spectrum(sat_pos, ranges)) return std::move(*spec);
  }
  return dense_spectrum(sat_pos, ranges);
}

double detection_statistic(const Spectrum& spectrum, int n) {
  if (n < 0 || spectrum.dim() < n + 2) {
    throw InsufficientDimension("detection statistic needs at least n+2 eigenvalues");
  }
  const double largest = std::abs(spectrum.value(0));
  if (largest == 0.0) return 0.0;
  return (std::abs(spectrum.value(n)) + std::abs(spectrum.value(n + 1))) / (2.0 * largest);
}

double detection_statistic_2021(const Spectrum& spectrum, int n, int m) {
  if (n < 0 || m <= n) {
    throw InsufficientDimension("legacy statistic needs more measurements than dimensions");
  }
  if (spectrum.dim() < m) {
    throw InsufficientDimension("legacy statistic needs at least m eigenvalues");
  }
  const double largest = std::abs(spectrum.value(0));
  if (largest == 0.0) return 0.0;
  double tail = 0.0;
  for (int i = n; i < m; ++i) tail += std::abs(spectrum.value(i));
  tail /= static_cast<double>(m - n);
  return std::abs(spectrum.value(n)) * tail / largest;
}

std::vector<Eigen::Index> exclusion_ranking(const Spectrum& spectrum, int n) {
  if (n < 0 || spectrum.vectors.cols() < n + 2) {
    throw InsufficientDimension("exclusion needs eigenvectors n+1 and n+2");
  }
  const Eigen::Index rows = spectrum.dim();
  Vector score(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    score(i) = 0.5 * (std::abs(spectrum.vectors(i, n)) + std::abs(spectrum.vectors(i, n + 1)));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(std::max<Eigen::Index>(rows - 1, 0)));
  std::iota(order.begin(), order.end(), Eigen::Index{1});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score(a) > score(b); });
  return order;
}

Eigen::Index exclusion_candidate(const Spectrum& spectrum, int n) {
  const auto ranking = exclusion_ranking(spectrum, n);
  if (ranking.empty()) throw InsufficientDimension("no satellite rows to exclude");
  return ranking.front();
}

FdeResult greedy_edm_fde(const EpochSet& epoch, double threshold, const EdmFdeOptions& opts) {
  if (epoch.size() < 4) {
    throw TooFewMeasurements("greedy EDM FDE needs at least 4 measurements, got " +
                             std::to_string(epoch.size()));
  }
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (opts.statistic == EdmStatistic::current && !(threshold < 1.0)) {
    throw std::invalid_argument("EDM threshold must lie in (0, 1)");
  }
  if (opts.removals_per_iter < 1) throw std::invalid_argument("removals_per_iter must be >= 1");

  const auto start = std::chrono::steady_clock::now();

  FdeResult result;
  result.method = opts.statistic == EdmStatistic::current ? FdeMethod::edm : FdeMethod::edm2021;
  result.flags.assign(epoch.size(), false);
  for (const Measurement& m : epoch.measurements) result.sv_ids.push_back(m.sv_id);

  const PositionMatrix all_pos = satellite_positions(epoch);
  const Vector all_ranges = conditioned_ranges(epoch);
  std::vector<Eigen::Index> active(epoch.size());
  std::iota(active.begin(), active.end(), Eigen::Index{0});

  const int n = opts.dimension;
  const int fault_cap = opts.max_faults.value_or(static_cast<int>(epoch.size()));

  while (true) {
    const auto count = static_cast<Eigen::Index>(active.size());
    PositionMatrix pos(count, 3);
    Vector ranges(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      pos.row(i) = all_pos.row(active[static_cast<std::size_t>(i)]);
      ranges(i) = all_ranges(active[static_cast<std::size_t>(i)]);
    }
    const Spectrum spec = gram_spectrum(pos, ranges, opts.route);
    const double stat = opts.statistic == EdmStatistic::current
                            ? detection_statistic(spec, n)
                            : detection_statistic_2021(spec, n, static_cast<int>(count));
    result.statistic_trace.push_back(stat);

    if (active.size() <= 4) break;
    if (stat < threshold) break;
    const int excluded = static_cast<int>(result.exclusion_order.size());
    if (excluded >= fault_cap) break;

    const auto ranking = exclusion_ranking(spec, n);
    const auto take = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        {opts.removals_per_iter, static_cast<std::ptrdiff_t>(active.size()) - 4,
         fault_cap - excluded}));
    std::vector<Eigen::Index> rows(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(take));
    for (Eigen::Index row : rows) {
      const auto original = active[static_cast<std::size_t>(row - 1)];
      result.flags[static_cast<std::size_t>(original)] = true;
      result.exclusion_order.push_back(epoch.measurements[static_cast<std::size_t>(original)].sv_id);
    }
    std::sort(rows.begin(), rows.end(), std::greater<>());
    for (Eigen::Index row : rows) active.erase(active.begin() + (row - 1));
  }

  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace edmfde
