#include "edmfde/matrix_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "edmfde/errors.hpp"

namespace edmfde {

SymMatrix::SymMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw InvalidMatrix("symmetric matrix must be square and non-empty");
  }
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < entries_.rows(); ++i) {
      if (entries_(i, j) != entries_(j, i) &&
          !(std::isnan(entries_(i, j)) && std::isnan(entries_(j, i)))) {
        throw InvalidMatrix("matrix is not symmetric");
      }
    }
  }
}

SymMatrix SymMatrix::from_lower(const Matrix& entries) {
  if (entries.rows() == 0 || entries.rows() != entries.cols()) {
    throw InvalidMatrix("symmetric matrix must be square and non-empty");
  }
  Matrix full = entries.selfadjointView<Eigen::Lower>();
  return SymMatrix(std::move(full), Trusted{});
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

void sort_by_magnitude(Spectrum& spectrum) {
  const Eigen::Index k = spectrum.values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(spectrum.values(a)) > std::abs(spectrum.values(b));
  });
  Vector values(k);
  Matrix vectors(spectrum.vectors.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    values(i) = spectrum.values(order[static_cast<std::size_t>(i)]);
    vectors.col(i) = spectrum.vectors.col(order[static_cast<std::size_t>(i)]);
  }
  spectrum.values = std::move(values);
  spectrum.vectors = std::move(vectors);
}

Spectrum sym_eig(const SymMatrix& s, const JacobiSettings& settings) {
  Matrix a = s.entries();
  if (!a.allFinite()) throw InvalidMatrix("matrix has non-finite entries");

  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  const double scale = a.norm();
  const double tolerance = settings.relative_tolerance * scale;
  // Entries this small cannot keep the off-diagonal norm above tolerance.
  const double negligible = tolerance / static_cast<double>(n);

  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tolerance) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= negligible) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double np = c * arp - sn * arq;
          const double nq = sn * arp + c * arq;
          a(r, p) = np;
          a(p, r) = np;
          a(r, q) = nq;
          a(q, r) = nq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (Eigen::Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - sn * vrq;
          v(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }

  Spectrum out{a.diagonal(), std::move(v)};
  sort_by_magnitude(out);
  return out;
}

double spd_condition(const Matrix& normal) {
  const Spectrum spec = sym_eig(SymMatrix::from_lower(normal));
  const double largest = spec.values.maxCoeff();
  const double smallest = spec.values.minCoeff();
  if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  return largest / smallest;
}

Matrix spd_inverse(const Matrix& normal) {
  if (!normal.allFinite()) throw SingularGeometry("normal matrix has non-finite entries");
  if (spd_condition(normal) > kMaxCondition) {
    throw SingularGeometry("normal matrix is rank deficient");
  }
  return normal.llt().solve(Matrix::Identity(normal.rows(), normal.cols()));
}

Vector weighted_normal_solve(const Matrix& a, const Vector& w, const Vector& y) {
  if (a.rows() != w.size() || a.rows() != y.size()) {
    throw std::invalid_argument("weighted_normal_solve: dimension mismatch");
  }
  if (a.rows() < a.cols()) {
    throw std::invalid_argument("weighted_normal_solve: fewer rows than unknowns");
  }
  if ((w.array() <= 0.0).any()) {
    throw std::invalid_argument("weighted_normal_solve: weights must be positive");
  }
  const Matrix weighted = a.transpose() * w.asDiagonal();
  const Matrix normal = weighted * a;
  if (!normal.allFinite()) throw SingularGeometry("normal matrix has non-finite entries");
  if (spd_condition(normal) > kMaxCondition) {
    throw SingularGeometry("normal matrix is rank deficient");
  }
  return normal.llt().solve(weighted * y);
}

}  // namespace edmfde
