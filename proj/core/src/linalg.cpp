#include "mtrl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::linalg {

namespace {

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DimensionError(std::string(what) + ": matrix has non-finite entries");
  }
}

OrthonormalBasis::OrthonormalBasis(Matrix columns) : columns_(std::move(columns)) {
  require_finite(columns_, "OrthonormalBasis");
  if (columns_.cols() > columns_.rows()) {
    throw InvariantError("OrthonormalBasis: rank exceeds ambient dimension");
  }
  const Matrix gram = columns_.transpose() * columns_;
  const Matrix eye = Matrix::Identity(columns_.cols(), columns_.cols());
  if (columns_.cols() > 0 && (gram - eye).cwiseAbs().maxCoeff() > kOrthonormalTol) {
    throw InvariantError("OrthonormalBasis: columns are not orthonormal");
  }
}

OrthonormalBasis OrthonormalBasis::empty(Index ambient_dim) {
  return OrthonormalBasis(Matrix(ambient_dim, 0));
}

OrthonormalBasis OrthonormalBasis::leading(Index k) const {
  if (k < 0 || k > rank()) {
    throw DimensionError("OrthonormalBasis::leading: k out of range");
  }
  return OrthonormalBasis(columns_.leftCols(k));
}

ReducedSvd reduced_svd(const Matrix& m, Index r) {
  if (r < 0 || r > std::min(m.rows(), m.cols())) {
    throw DimensionError("reduced_svd: r must lie in [0, min(rows, cols)]");
  }
  require_finite(m, "reduced_svd");
  const auto svd = thin_svd(m);
  Matrix u = svd.matrixU().leftCols(r);
  Matrix v = svd.matrixV().leftCols(r);
  Vector s = svd.singularValues().head(r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > 1e-12) {
        if (u(i, j) < 0.0) {
          u.col(j) *= -1.0;
          v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return ReducedSvd{OrthonormalBasis(std::move(u)), std::move(s),
                    OrthonormalBasis(std::move(v))};
}

Vector singular_values(const Matrix& m) {
  require_finite(m, "singular_values");
  if (m.size() == 0) return Vector(0);
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

PinvSolution pinv_apply(const Matrix& a, const Vector& y) {
  if (a.rows() != y.size()) {
    throw DimensionError("pinv_apply: rows(A) must equal size(y)");
  }
  require_finite(a, "pinv_apply");
  PinvSolution out;
  out.x = Vector::Zero(a.cols());
  if (a.size() == 0) {
    out.rank_deficient = a.cols() > 0;
    return out;
  }
  const auto svd = thin_svd(a);
  const Vector& s = svd.singularValues();
  const double cutoff = kRankTol * s(0);
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  }
  out.rank_deficient = rank < a.cols();
  if (rank == 0) return out;
  const Vector uty = svd.matrixU().leftCols(rank).transpose() * y;
  out.x = svd.matrixV().leftCols(rank) *
          (uty.array() / s.head(rank).array()).matrix();
  return out;
}

double subspace_distance(const OrthonormalBasis& b1, const OrthonormalBasis& b2) {
  if (b1.ambient_dim() != b2.ambient_dim()) {
    throw DimensionError("subspace_distance: ambient dimensions differ");
  }
  const Matrix& c1 = b1.columns();
  const Matrix& c2 = b2.columns();
  const Matrix residual = c2 - c1 * (c1.transpose() * c2);
  return std::clamp(spectral_norm(residual), 0.0, 1.0);
}

SingularRange extreme_singular_values(const Matrix& m) {
  const Vector s = singular_values(m);
  if (s.size() == 0) return {};
  return {s(s.size() - 1), s(0)};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

OrthonormalBasis orthonormalize(const Matrix& m) {
  require_finite(m, "orthonormalize");
  if (m.cols() > m.rows()) {
    throw DimensionError("orthonormalize: more columns than rows");
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return OrthonormalBasis(std::move(q));
}

}  // namespace mtrl::linalg
