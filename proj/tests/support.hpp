#pragma once

// Independent reference implementations used to check the library. None of
// these call into edmfde numerics.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "edmfde/types.hpp"

namespace support {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

// Gauss-Jordan with partial pivoting.
inline Matrix gauss_inverse(Matrix a) {
  const Eigen::Index n = a.rows();
  Matrix inv = Matrix::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
    }
    if (a(pivot, c) == 0.0) throw std::runtime_error("singular");
    a.row(c).swap(a.row(pivot));
    inv.row(c).swap(inv.row(pivot));
    const double d = a(c, c);
    a.row(c) /= d;
    inv.row(c) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

// Unit line-of-sight rows from satellites to the receiver.
inline Matrix los_rows(const Vec3& rx, const std::vector<Vec3>& sats) {
  Matrix g(static_cast<Eigen::Index>(sats.size()), 3);
  for (std::size_t i = 0; i < sats.size(); ++i) {
    const Vec3 d = rx - sats[i];
    g.row(static_cast<Eigen::Index>(i)) = d.transpose() / d.norm();
  }
  return g;
}

// R^T P R with the explicit weighted projector P = W - W G (G^T W G)^-1 G^T W.
inline double chi_square_oracle(const Matrix& g, const Vector& w, const Vector& r) {
  const Matrix W = w.asDiagonal();
  const Matrix P = W - W * g * gauss_inverse(g.transpose() * W * g) * g.transpose() * W;
  return r.dot(P * r);
}

// w_i e_i^2 / (1 - H_ii) with H = G (G^T W G)^-1 G^T W and e = (I - H) r.
inline Vector normalized_residual_oracle(const Matrix& g, const Vector& w, const Vector& r) {
  const Matrix W = w.asDiagonal();
  const Matrix H = g * gauss_inverse(g.transpose() * W * g) * g.transpose() * W;
  const Vector e = r - H * r;
  Vector out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out(i) = w(i) * e(i) * e(i) / (1.0 - H(i, i));
  return out;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

struct Geometry {
  Vec3 rx = Vec3::Zero();
  std::vector<Vec3> sats;
  std::vector<double> ranges;
};

// Receiver on a 6371 km sphere, satellites on 20000..27000 km spheres, each
// at least ~10 degrees above the receiver's local horizon.
inline Geometry random_geometry(std::mt19937_64& rng, int m) {
  Geometry g;
  const Vec3 up = random_unit(rng);
  g.rx = 6.371e6 * up;
  std::uniform_real_distribution<double> radius(2.0e7, 2.7e7);
  while (static_cast<int>(g.sats.size()) < m) {
    const Vec3 s = radius(rng) * random_unit(rng);
    if ((s - g.rx).normalized().dot(up) < 0.18) continue;
    g.sats.push_back(s);
    g.ranges.push_back((s - g.rx).norm());
  }
  return g;
}

// Noiseless epoch for a geometry, optional common receiver clock offset.
inline edmfde::EpochSet make_epoch(const Geometry& g, double clock_m = 0.0) {
  edmfde::EpochSet e;
  e.trace_id = "synthetic";
  e.truth_rx_pos = g.rx;
  for (std::size_t i = 0; i < g.sats.size(); ++i) {
    edmfde::Measurement m;
    m.sv_id = "S" + std::to_string(i + 1);
    m.constellation = "SYN";
    m.sat_pos = g.sats[i];
    m.pseudorange_raw = g.ranges[i] + clock_m;
    m.truth_fault = false;
    e.measurements.push_back(m);
  }
  return e;
}

inline edmfde::EpochSet random_epoch(std::mt19937_64& rng, int m, double clock_m = 0.0) {
  return make_epoch(random_geometry(rng, m), clock_m);
}

inline void inject_fault(edmfde::EpochSet& e, std::size_t index, double bias_m) {
  e.measurements.at(index).pseudorange_raw += bias_m;
  e.measurements.at(index).truth_fault = true;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace support
