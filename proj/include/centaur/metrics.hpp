#pragma once

#include <Eigen/Core>

#include "centaur/random_stream.hpp"

namespace centaur {

/// Thin QR factor pair with the diag(R) > 0 sign convention, which makes the
/// factorisation unique and turns QR of an orthonormal matrix into the identity.
struct ThinQr {
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
};

/// Thin QR with positive R diagonal. Throws NumericError when the smallest
/// |R_jj| falls below rank_tol times the largest (rank-deficient input).
ThinQr thin_qr_positive(const Eigen::MatrixXd& a, double rank_tol = 1e-12);

/// A d x k matrix with (numerically) orthonormal columns.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;  // empty placeholder state

  /// Wraps an already-orthonormal matrix; defect above 1e-8 is an InputError.
  static OrthonormalBasis from_matrix(Eigen::MatrixXd m);

  /// Q factor of `m` (sign-conventioned thin QR); post-QR defect must be <= 1e-10.
  static OrthonormalBasis from_qr(const Eigen::MatrixXd& m);

  /// Q factor of a d x k matrix with i.i.d. standard normal entries
  /// (Haar-distributed on the set of column-orthonormal matrices).
  static OrthonormalBasis haar(Eigen::Index d, Eigen::Index k, RandomStream& stream);

  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }

  /// || B^T B - I ||_F
  double orthonormality_defect() const;

 private:
  explicit OrthonormalBasis(Eigen::MatrixXd m) : data_(std::move(m)) {}
  Eigen::MatrixXd data_;
};

/// Principal angle distance || (I - B B^T) B_ref ||_2, computed as
/// sqrt(1 - s_min(B^T B_ref)^2) via a k x k SVD and clamped to [0, 1].
/// Clamping beyond 1e-12 indicates a bug and raises NumericError.
double principal_angle_dist(const OrthonormalBasis& b, const OrthonormalBasis& b_ref);

/// s_min(B1^T B2); satisfies overlap^2 + dist^2 = 1.
double min_singular_overlap(const OrthonormalBasis& b1, const OrthonormalBasis& b2);

/// sqrt(k) * principal_angle_dist, an upper bound on the Frobenius-norm
/// subspace distance used by some prior metrics.
double frobenius_dist_upper_bound(const OrthonormalBasis& b, const OrthonormalBasis& b_ref);

struct SpectralSummary {
  double s1 = 0.0;            // largest singular value of W / sqrt(n)
  double sk = 0.0;            // smallest
  double kappa = 0.0;         // s1 / sk, +inf sentinel when rank-deficient
  double max_row_norm = 0.0;  // max_i || W_{i,:} ||_2 (unscaled rows)
};

/// Singular values of W / sqrt(n) with n = W.rows(), condition number, and the
/// unscaled row-norm maximum used by the incoherence check.
SpectralSummary spectral_summary(const Eigen::MatrixXd& w);

}  // namespace centaur
