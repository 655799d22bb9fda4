#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "edmfde/edm_fde.hpp"
#include "edmfde/errors.hpp"

using namespace edmfde;

TEST_CASE("conditioning with zero corrections returns the raw pseudorange") {
  Measurement m;
  m.pseudorange_raw = 2.1e7;
  CHECK(condition_pseudorange(m, 0.0) == 2.1e7);
  m.iono_delay = 3.0;
  m.tropo_delay = 2.0;
  m.constellation_bias = 1.0;
  m.sat_clock_bias = 4.0;
  CHECK(condition_pseudorange(m, 10.0) == doctest::Approx(2.1e7 + 10 - 3 + 2 - 1 + 4));
}

TEST_CASE("build_edm layout") {
  std::mt19937_64 rng(1);
  const auto g = support::random_geometry(rng, 6);
  const EpochSet e = support::make_epoch(g);
  const auto d = build_edm(e);
  REQUIRE(d.dim() == 7);
  for (int i = 0; i < 6; ++i) {
    CHECK(d.entries(0, i + 1) == doctest::Approx(g.ranges[i] * g.ranges[i]).epsilon(1e-12));
    for (int j = 0; j < 6; ++j) {
      CHECK(d.entries(i + 1, j + 1) ==
            doctest::Approx((g.sats[i] - g.sats[j]).squaredNorm()).epsilon(1e-12));
    }
  }
  EpochSet small = e;
  small.measurements.resize(3);
  CHECK_THROWS_AS(build_edm(small), TooFewMeasurements);
}

TEST_CASE("Gram matrix equals centered inner products for consistent points") {
  std::mt19937_64 rng(2);
  const auto g = support::random_geometry(rng, 9);
  const auto gram = gram_from_edm(build_edm(support::make_epoch(g)));
  Eigen::MatrixXd pts(10, 3);
  pts.row(0) = g.rx.transpose();
  for (int i = 0; i < 9; ++i) pts.row(i + 1) = g.sats[i].transpose();
  const Eigen::RowVector3d mean = pts.colwise().mean();
  pts.rowwise() -= mean;
  const Eigen::MatrixXd want = pts * pts.transpose();
  CHECK((gram.entries() - want).norm() / want.norm() < 1e-9);
}

TEST_CASE("low-rank and dense routes agree") {
  std::mt19937_64 rng(4);
  for (int m : {5, 8, 20, 40}) {
    auto e = support::random_epoch(rng, m);
    support::inject_fault(e, 2, 300.0);
    const auto pos = satellite_positions(e);
    const auto ranges = conditioned_ranges(e);
    const Spectrum dense = gram_spectrum(pos, ranges, EigenRoute::dense);
    const Spectrum low = gram_spectrum(pos, ranges, EigenRoute::low_rank);
    const double scale = std::abs(dense.value(0));
    for (Eigen::Index k = 0; k <= m; ++k) {
      CHECK(std::abs(dense.value(k) - low.value(k)) / scale < 1e-9);
    }
    CHECK(detection_statistic(low) ==
          doctest::Approx(detection_statistic(dense)).epsilon(1e-6));
    CHECK(exclusion_candidate(low) == exclusion_candidate(dense));
  }
}

TEST_CASE("detection statistic separates consistent and faulty epochs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto e = support::random_epoch(rng, 8 + trial);
    const double clean = detection_statistic(gram_spectrum(satellite_positions(e), conditioned_ranges(e)));
    CHECK(clean < 1e-9);
    support::inject_fault(e, 0, 500.0);
    const double faulty = detection_statistic(gram_spectrum(satellite_positions(e), conditioned_ranges(e)));
    CHECK(faulty > 100.0 * clean);
  }
}

TEST_CASE("detection statistic needs n+2 eigenvalues") {
  Spectrum s;
  s.values = Eigen::VectorXd::Ones(4);
  s.vectors = Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(detection_statistic(s, 3), InsufficientDimension);
}

TEST_CASE("exclusion ranking skips the receiver row and breaks ties low") {
  Spectrum s;
  s.values = Eigen::VectorXd::LinSpaced(5, 5, 1);
  s.vectors = Eigen::MatrixXd::Zero(5, 5);
  s.vectors(0, 3) = 1.0;
  s.vectors(2, 3) = 0.5;
  s.vectors(4, 4) = -0.5;
  const auto rank = exclusion_ranking(s, 3);
  REQUIRE(rank.size() == 4);
  CHECK(rank[0] == 2);
  CHECK(rank[1] == 4);
  CHECK(rank[2] == 1);
  CHECK(rank[3] == 3);
}

TEST_CASE("greedy EDM FDE removes a single large fault") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 10 + trial % 15;
    auto e = support::random_epoch(rng, m);
    const std::size_t bad = static_cast<std::size_t>(trial) % e.size();
    support::inject_fault(e, bad, 800.0);
    const FdeResult r = greedy_edm_fde(e, 1e-10);
    CHECK(r.flagged_count() == 1);
    CHECK(r.flags[bad]);
    CHECK(r.exclusion_rank(e.measurements[bad].sv_id) == 1);
    CHECK(r.statistic_trace.size() == 2);
    CHECK(r.wall_time_s > 0.0);
  }
}

TEST_CASE("greedy EDM FDE options") {
  std::mt19937_64 rng(8);
  auto e = support::random_epoch(rng, 12);
  support::inject_fault(e, 1, 500.0);
  support::inject_fault(e, 5, 700.0);
  EdmFdeOptions cap;
  cap.max_faults = 1;
  CHECK(greedy_edm_fde(e, 1e-12, cap).flagged_count() == 1);
  EdmFdeOptions batch;
  batch.removals_per_iter = 2;
  const FdeResult two = greedy_edm_fde(e, 1e-10, batch);
  CHECK(two.flagged_count() % 2 == 0);
  CHECK(two.statistic_trace.size() == two.flagged_count() / 2 + 1);
  CHECK(two.flags[1]);
  CHECK(two.flags[5]);
  CHECK_THROWS_AS(greedy_edm_fde(e, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(greedy_edm_fde(e, 0.0), std::invalid_argument);
  EdmFdeOptions legacy;
  legacy.statistic = EdmStatistic::legacy2021;
  CHECK(greedy_edm_fde(e, 5.0, legacy).method == FdeMethod::edm2021);

  // Never drops below four satellites.
  const FdeResult all = greedy_edm_fde(e, 1e-300);
  CHECK(all.flagged_count() == e.size() - 4);
}
