#pragma once

#include <Eigen/Dense>

namespace edmfde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// Dense square matrix that is exactly symmetric.
class SymMatrix {
 public:
  /// Throws InvalidMatrix unless `entries` is square, non-empty, and
  /// bitwise symmetric.
  explicit SymMatrix(Matrix entries);

  /// Builds from the lower triangle, mirroring it into the upper one.
  static SymMatrix from_lower(const Matrix& entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  struct Trusted {};
  SymMatrix(Matrix entries, Trusted) : entries_(std::move(entries)) {}

  Matrix entries_;
};

/// Eigenpairs ordered by descending |value|.
///
/// `vectors` has `dim()` rows; column k pairs with values[k]. A spectrum may
/// be truncated: eigenvalues past values.size() are exactly zero and their
/// eigenvectors are not stored. sym_eig always returns the full spectrum.
struct Spectrum {
  Vector values;
  Matrix vectors;

  Eigen::Index dim() const { return vectors.rows(); }
  Eigen::Index stored() const { return values.size(); }
  /// values[k] for stored pairs, 0 for the implicit zero tail.
  double value(Eigen::Index k) const { return k < values.size() ? values(k) : 0.0; }
};

struct JacobiSettings {
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Full eigendecomposition by cyclic Jacobi rotations. Deterministic for
/// identical input bits. Throws InvalidMatrix on non-finite entries.
Spectrum sym_eig(const SymMatrix& s, const JacobiSettings& settings = {});

/// Reorders eigenpairs by descending |value|, keeping the original order on
/// ties.
void sort_by_magnitude(Spectrum& spectrum);

/// Ratio of largest to smallest eigenvalue of a symmetric positive definite
/// matrix; +inf when the smallest is not positive.
double spd_condition(const Matrix& normal);

/// Inverse of a small symmetric positive definite matrix. Throws
/// SingularGeometry when spd_condition exceeds kMaxCondition.
Matrix spd_inverse(const Matrix& normal);

inline constexpr double kMaxCondition = 1e12;

/// x minimizing (y - A x)^T diag(w) (y - A x) via the normal equations.
///
/// Requires rows(A) >= cols(A), w > 0. Throws SingularGeometry when the
/// normal matrix condition estimate exceeds kMaxCondition.
Vector weighted_normal_solve(const Matrix& a, const Vector& w, const Vector& y);

}  // namespace edmfde
