#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "centaur/metrics.hpp"
#include "centaur/privacy_mechanisms.hpp"
#include "centaur/random_stream.hpp"
#include "centaur/rdp_accountant.hpp"
#include "centaur/synthetic_lrl.hpp"

namespace centaur {

/// Moment source for power iterations: per-client sampled second moments, or
/// the exact population target (a test fixture that isolates the iteration
/// from sampling noise).
enum class MomentMode { sampled, exact_oracle };

struct PpmConfig {
  int power_iterations = 1;  // L
  double sigma0 = 0.0;
  double zeta0 = 0.0;
  int mbar0 = 1;             // per-iteration local batch size
  int trials = 1;            // T0
  double eps_trial = 0.01;   // per-trial target accuracy
  double eps_target = 0.2;   // accuracy required of the selected candidate
  MomentMode moment_mode = MomentMode::sampled;

  void validate() const;  // throws ParameterError
};

/// (1/|idx|) * sum_j y_j^2 x_j (x_j^T X), evaluated as two matrix-vector
/// passes per point so the d x d moment matrix is never materialised.
/// Summation follows the given index order.
Eigen::MatrixXd local_second_moment(const ClientDataset& data, std::span<const int> idx,
                                    const Eigen::MatrixXd& x_mat);

/// Population target of the power iterations.
Eigen::MatrixXd exact_moment_target(const GroundTruth& truth);

/// One private power method trial: random orthonormal start, then L rounds of
/// per-client fresh-subset moments averaged through the Gaussian mechanism and
/// re-orthonormalised by QR.
OrthonormalBasis ppm_trial(const FrlProblem& problem, const PpmConfig& cfg,
                           RandomStream& stream);

/// Smallest index c-hat whose minimum singular overlap with at least half of
/// the pool clears 1 - 2 eps_trial^2. Throws SelectionError when no candidate
/// qualifies.
int cross_validate_select(const std::vector<OrthonormalBasis>& candidates,
                          double eps_trial);

/// T0 independent trials on derived substreams followed by cross-validation
/// selection. Charges T0 * L mechanism rounds to the ledger; selection is
/// post-processing and charges nothing.
OrthonormalBasis initialize(const FrlProblem& problem, const PpmConfig& cfg,
                            RandomStream& stream, PrivacyLedger* ledger);

/// Test fixture: a basis at exactly dist = eps0 from B*, built by rotating one
/// column of B* toward a random orthogonal-complement direction.
OrthonormalBasis spectral_oracle_init(const GroundTruth& truth, double eps0,
                                      RandomStream& stream);

}  // namespace centaur
