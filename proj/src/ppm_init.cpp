#include "centaur/ppm_init.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "centaur/errors.hpp"
#include "centaur/lrl_client.hpp"

namespace centaur {

void PpmConfig::validate() const {
  if (power_iterations < 1) throw ParameterError("PpmConfig: L must be >= 1");
  if (trials < 1) throw ParameterError("PpmConfig: T0 must be >= 1");
  if (!(eps_trial > 0.0 && eps_trial < 1.0))
    throw ParameterError("PpmConfig: eps_trial must lie in (0, 1)");
  if (!(eps_target > 0.0 && eps_target < 1.0))
    throw ParameterError("PpmConfig: eps_target must lie in (0, 1)");
  if (mbar0 < 1) throw ParameterError("PpmConfig: mbar0 must be >= 1");
  GaussianMechanismParams{zeta0, sigma0}.validate();
  // Selection soundness requires the paired accuracies to satisfy
  // sqrt(1 - eps0^2) + 1 - sqrt(1 - eps_i^2) + eps_i < 1 - 2 eps_i^2.
  const double lhs = std::sqrt(1.0 - eps_target * eps_target) + 1.0 -
                     std::sqrt(1.0 - eps_trial * eps_trial) + eps_trial;
  const double rhs = 1.0 - 2.0 * eps_trial * eps_trial;
  if (!(lhs < rhs))
    throw ParameterError("PpmConfig: (eps_trial, eps_target) violate the selection condition");
}

Eigen::MatrixXd local_second_moment(const ClientDataset& data, std::span<const int> idx,
                                    const Eigen::MatrixXd& x_mat) {
  if (idx.empty()) throw ParameterError("local_second_moment: empty subset");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x_mat.rows(), x_mat.cols());
  for (int j : idx) {
    if (j < 0 || j >= data.size())
      throw InputError("local_second_moment: index out of range");
    const Eigen::VectorXd x = data.inputs.row(j).transpose();
    const Eigen::RowVectorXd projected = x.transpose() * x_mat;  // x^T X, 1 x k
    const double y = data.responses(j);
    acc.noalias() += (y * y) * x * projected;
  }
  return acc / static_cast<double>(idx.size());
}

Eigen::MatrixXd exact_moment_target(const GroundTruth& truth) {
  const double n = static_cast<double>(truth.w_star.rows());
  const Eigen::MatrixXd v_star = truth.w_star / std::sqrt(n);
  const Eigen::MatrixXd gamma =
      truth.b_star.data() * (v_star.transpose() * v_star) * truth.b_star.data().transpose();
  return 2.0 * gamma +
         gamma.trace() * Eigen::MatrixXd::Identity(gamma.rows(), gamma.cols());
}

OrthonormalBasis ppm_trial(const FrlProblem& problem, const PpmConfig& cfg,
                           RandomStream& stream) {
  cfg.validate();
  const int m = problem.dims.m;
  if (cfg.mbar0 > m) throw ParameterError("ppm_trial: mbar0 must be <= m");
  const int d = problem.dims.d;
  const int k = problem.dims.k;
  const int n = problem.dims.n;

  Eigen::MatrixXd target;
  if (cfg.moment_mode == MomentMode::exact_oracle)
    target = exact_moment_target(problem.truth);

  OrthonormalBasis x = OrthonormalBasis::haar(d, k, stream);
  for (int l = 0; l < cfg.power_iterations; ++l) {
    Eigen::MatrixXd y;
    if (cfg.moment_mode == MomentMode::exact_oracle) {
      y = target * x.data();
      if (cfg.sigma0 > 0.0)
        y += cfg.sigma0 * cfg.zeta0 / static_cast<double>(n) * stream.normal_matrix(d, k);
    } else {
      std::vector<Eigen::MatrixXd> locals;
      locals.reserve(n);
      for (int i = 0; i < n; ++i) {
        const std::vector<int> idx = sample_without_replacement(m, cfg.mbar0, stream);
        locals.push_back(local_second_moment(problem.clients[i], idx, x.data()));
      }
      y = gaussian_mechanism(locals, GaussianMechanismParams{cfg.zeta0, cfg.sigma0},
                             stream)
              .output;
    }
    x = OrthonormalBasis::from_qr(y);
  }
  return x;
}

int cross_validate_select(const std::vector<OrthonormalBasis>& candidates,
                          double eps_trial) {
  if (candidates.empty())
    throw ParameterError("cross_validate_select: need at least one candidate");
  for (const auto& c : candidates) {
    if (c.rows() != candidates.front().rows() || c.cols() != candidates.front().cols())
      throw InputError("cross_validate_select: candidate shape mismatch");
  }
  const int t0 = static_cast<int>(candidates.size());
  const int majority = (t0 + 1) / 2;
  const double threshold = 1.0 - 2.0 * eps_trial * eps_trial;
  for (int c_hat = 0; c_hat < t0; ++c_hat) {
    int agree = 0;
    for (int c = 0; c < t0; ++c) {
      if (min_singular_overlap(candidates[c], candidates[c_hat]) >= threshold) ++agree;
    }
    if (agree >= majority) return c_hat;
  }
  throw SelectionError("cross_validate_select: no candidate agrees with a majority");
}

OrthonormalBasis initialize(const FrlProblem& problem, const PpmConfig& cfg,
                            RandomStream& stream, PrivacyLedger* ledger) {
  cfg.validate();
  if (ledger != nullptr && !(cfg.sigma0 > 0.0))
    throw ParameterError("initialize: refusing to account a non-private initialization");
  std::vector<OrthonormalBasis> candidates;
  candidates.reserve(cfg.trials);
  for (int c = 0; c < cfg.trials; ++c) {
    RandomStream trial_stream = stream.substream(static_cast<std::uint64_t>(c));
    candidates.push_back(ppm_trial(problem, cfg, trial_stream));
  }
  if (ledger != nullptr)
    ledger->charge_init(init_rdp_curve(cfg.trials, cfg.power_iterations, cfg.sigma0,
                                       ledger->adjacency,
                                       ledger->init_curve.alpha_grid));
  const int selected = cross_validate_select(candidates, cfg.eps_trial);
  return candidates[selected];
}

OrthonormalBasis spectral_oracle_init(const GroundTruth& truth, double eps0,
                                      RandomStream& stream) {
  if (!(eps0 >= 0.0 && eps0 < 1.0))
    throw ParameterError("spectral_oracle_init: eps0 must lie in [0, 1)");
  const Eigen::MatrixXd& b_star = truth.b_star.data();
  const Eigen::Index d = b_star.rows();
  const Eigen::Index k = b_star.cols();
  if (d == k) {
    if (eps0 != 0.0)
      throw ParameterError("spectral_oracle_init: full basis admits only eps0 = 0");
    return truth.b_star;
  }
  // Unit direction in the orthogonal complement of col(B*).
  Eigen::VectorXd u;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const Eigen::VectorXd g = stream.normal_matrix(d, 1);
    Eigen::VectorXd candidate = g - b_star * (b_star.transpose() * g);
    const double norm = candidate.norm();
    if (norm > 1e-8) {
      u = candidate / norm;
      break;
    }
  }
  if (u.size() == 0)
    throw NumericError("spectral_oracle_init: failed to draw a complement direction");
  const double sin_theta = eps0;
  const double cos_theta = std::sqrt(1.0 - eps0 * eps0);
  Eigen::MatrixXd rotated = b_star;
  rotated.col(0) = cos_theta * b_star.col(0) + sin_theta * u;
  return OrthonormalBasis::from_matrix(std::move(rotated));
}

}  // namespace centaur
