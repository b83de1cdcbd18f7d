#include "centaur/metrics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "centaur/errors.hpp"

namespace centaur {

ThinQr thin_qr_positive(const Eigen::MatrixXd& a, double rank_tol) {
  const Eigen::Index d = a.rows();
  const Eigen::Index k = a.cols();
  if (k > d) throw InputError("thin_qr_positive: more columns than rows");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) = -q.col(j);
      r.row(j) = -r.row(j);
    }
  }
  double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < k; ++j) {
    max_diag = std::max(max_diag, r(j, j));
    min_diag = std::min(min_diag, r(j, j));
  }
  if (!(min_diag > rank_tol * max_diag))
    throw NumericError("thin_qr_positive: rank-deficient input (min diag " +
                       std::to_string(min_diag) + ")");
  return ThinQr{std::move(q), std::move(r)};
}

OrthonormalBasis OrthonormalBasis::from_matrix(Eigen::MatrixXd m) {
  if (m.cols() > m.rows()) throw InputError("OrthonormalBasis: k must be <= d");
  OrthonormalBasis b(std::move(m));
  if (!(b.orthonormality_defect() <= 1e-8))
    throw InputError("OrthonormalBasis: columns not orthonormal (defect " +
                     std::to_string(b.orthonormality_defect()) + ")");
  return b;
}

OrthonormalBasis OrthonormalBasis::from_qr(const Eigen::MatrixXd& m) {
  OrthonormalBasis b(thin_qr_positive(m).q);
  if (!(b.orthonormality_defect() <= 1e-10))
    throw NumericError("OrthonormalBasis::from_qr: post-QR defect above 1e-10");
  return b;
}

OrthonormalBasis OrthonormalBasis::haar(Eigen::Index d, Eigen::Index k,
                                        RandomStream& stream) {
  return from_qr(stream.normal_matrix(d, k));
}

double OrthonormalBasis::orthonormality_defect() const {
  const Eigen::Index k = data_.cols();
  return (data_.transpose() * data_ - Eigen::MatrixXd::Identity(k, k)).norm();
}

namespace {

double smallest_singular_value(const OrthonormalBasis& b1, const OrthonormalBasis& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw InputError("subspace metric: dimension mismatch");
  const Eigen::MatrixXd overlap = b1.data().transpose() * b2.data();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
  return svd.singularValues()(overlap.cols() - 1);
}

double clamp_unit(double v, const char* where) {
  if (v < -1e-12 || v > 1.0 + 1e-12)
    throw NumericError(std::string(where) + ": clamp overshoot beyond 1e-12");
  return std::min(1.0, std::max(0.0, v));
}

}  // namespace

double principal_angle_dist(const OrthonormalBasis& b, const OrthonormalBasis& b_ref) {
  if (b.rows() != b_ref.rows() || b.cols() != b_ref.cols())
    throw InputError("principal_angle_dist: dimension mismatch");
  // || (I - B B^T) B_ref ||_2 evaluated as the top singular value of the
  // complement residual B_ref - B (B^T B_ref). Equivalent to
  // sqrt(1 - s_min(B^T B_ref)^2) but free of the cancellation that floors the
  // k x k route near zero distance; still O(d k^2), no d x d projector.
  const Eigen::MatrixXd residual =
      b_ref.data() - b.data() * (b.data().transpose() * b_ref.data());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return clamp_unit(svd.singularValues()(0), "principal_angle_dist");
}

double min_singular_overlap(const OrthonormalBasis& b1, const OrthonormalBasis& b2) {
  return clamp_unit(smallest_singular_value(b1, b2), "min_singular_overlap");
}

double frobenius_dist_upper_bound(const OrthonormalBasis& b, const OrthonormalBasis& b_ref) {
  return std::sqrt(static_cast<double>(b.cols())) * principal_angle_dist(b, b_ref);
}

SpectralSummary spectral_summary(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  const Eigen::Index k = w.cols();
  if (n < k) throw InputError("spectral_summary: need n >= k");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w / std::sqrt(static_cast<double>(n)));
  SpectralSummary out;
  out.s1 = svd.singularValues()(0);
  out.sk = svd.singularValues()(k - 1);
  out.kappa = out.sk <= 1e-14 * out.s1 ? std::numeric_limits<double>::infinity()
                                       : out.s1 / out.sk;
  out.max_row_norm = w.rowwise().norm().maxCoeff();
  return out;
}

}  // namespace centaur
