#pragma once

#include <Eigen/Dense>

namespace mtrl::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Orthonormality tolerance used by OrthonormalBasis and reconstruction checks.
inline constexpr double kOrthonormalTol = 1e-8;
/// Singular values at or below kRankTol * sigma_max count as zero.
inline constexpr double kRankTol = 1e-10;

/// Throws DimensionError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// A d x r matrix with orthonormal columns (columns^T columns = I_r).
class OrthonormalBasis {
 public:
  /// Validates orthonormality to kOrthonormalTol; throws InvariantError.
  explicit OrthonormalBasis(Matrix columns);

  /// Empty basis (rank 0) in R^ambient_dim.
  static OrthonormalBasis empty(Index ambient_dim);

  const Matrix& columns() const { return columns_; }
  Index ambient_dim() const { return columns_.rows(); }
  Index rank() const { return columns_.cols(); }

  /// First k columns; k must not exceed rank().
  OrthonormalBasis leading(Index k) const;

  /// Orthogonal projector B B^T.
  Matrix projector() const { return columns_ * columns_.transpose(); }

 private:
  Matrix columns_;
};

struct ReducedSvd {
  OrthonormalBasis U;
  Vector S;  // descending, length r
  OrthonormalBasis V;
};

/// Top-r singular triplets of M. Each left singular vector is oriented so
/// its first entry with magnitude above 1e-12 is positive (the matching right
/// vector is flipped with it).
ReducedSvd reduced_svd(const Matrix& m, Index r);

/// All min(rows, cols) singular values, descending.
Vector singular_values(const Matrix& m);

struct PinvSolution {
  Vector x;
  /// Numerical rank is below the column count, so x is the minimum-norm
  /// member of a family of least-squares solutions.
  bool rank_deficient = false;
};

/// A^+ y via SVD with the kRankTol cutoff.
PinvSolution pinv_apply(const Matrix& a, const Vector& y);

/// ||(I - B1 B1^T) B2||_2, clamped to [0, 1].
double subspace_distance(const OrthonormalBasis& b1, const OrthonormalBasis& b2);

struct SingularRange {
  double min = 0.0;
  double max = 0.0;
};

SingularRange extreme_singular_values(const Matrix& m);

/// Largest singular value (0 for empty matrices).
double spectral_norm(const Matrix& m);

/// Orthonormal basis of the column space of a full-column-rank matrix, via
/// Householder QR. Column signs follow the QR factor, not the SVD convention.
OrthonormalBasis orthonormalize(const Matrix& m);

}  // namespace mtrl::linalg
