#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "centaur/lrl_client.hpp"
#include "centaur/metrics.hpp"
#include "centaur/privacy_mechanisms.hpp"
#include "centaur/rdp_accountant.hpp"
#include "centaur/synthetic_lrl.hpp"

namespace centaur {

enum class AggregationMode { additive, qr_retraction };
enum class ClientMode { lrl, general };

struct ServerConfig {
  double p_g = 1.0;      // Poisson participation probability
  int t_g = 0;           // global rounds
  double eta_g = 0.0;    // global step size
  GaussianMechanismParams gm;
  AggregationMode aggregation = AggregationMode::qr_retraction;
};

struct ClientConfig {
  int mbar = 1;
  ClientMode mode = ClientMode::lrl;
  int t_l = 1;           // local steps (general mode)
  double eta_l = 0.0;    // local step size (general mode)
  int head_epochs = 1;   // head fit epochs (general mode abstraction)
};

struct RoundRecord {
  int round = 0;
  int active_clients = 0;
  int clip_count = 0;
  double dist_to_truth = 0.0;
  double grad_norm = 0.0;  // Frobenius norm of the mechanism output
};

struct ServerTrace {
  std::vector<RoundRecord> rounds;
  Eigen::MatrixXd final_state;
};

/// b + eta_g * g.
Eigen::MatrixXd aggregate_additive(const Eigen::MatrixXd& b, const Eigen::MatrixXd& g,
                                   double eta_g);

/// Q factor of B - eta_g * G under the diag(R) > 0 convention, so eta_g = 0 is
/// a fixed point. Rank deficiency of B - eta_g G raises NumericError.
OrthonormalBasis aggregate_qr(const OrthonormalBasis& b, const Eigen::MatrixXd& g,
                              double eta_g);

/// The main loop: Poisson-sample an active set, run client rounds with
/// per-(round, client) derived streams, average through the Gaussian
/// mechanism, aggregate, and record telemetry. Empty active sets skip the
/// model update but still spend privacy. A ledger is required exactly when
/// the run is private (sigma > 0). Clients may execute on `client_threads`
/// workers; results merge in client-index order, so traces are
/// schedule-independent.
ServerTrace run_centaur(const FrlProblem& problem, const ServerConfig& server,
                        const ClientConfig& client, const OrthonormalBasis& b0,
                        PrivacyLedger* ledger, std::uint64_t master_seed,
                        int client_threads = 1);

struct RecipeConstants {
  double c_zeta = 1.0;
  double c_t = 1.0;
};

struct Recipe {
  double zeta_g = 0.0;
  double eta_g = 0.0;
  int t_g = 1;
};

/// Parameter recipe: zeta_g = c_zeta mu^2 k s_k^2 sqrt(d k log n),
/// eta_g = 1 / (4 s_1^2), and a round count
/// T_g = ceil(c_T kappa^2 log(n / (kappa^2 eta zeta sigma sqrt(d)))) with a
/// floor of one round when the log argument is <= 1 (noise floor at or above
/// the initialization radius).
Recipe parameter_recipe(const GroundTruth& truth, double sigma_g, int n, int d, int k,
                        const RecipeConstants& constants);

/// Empirical clip threshold: the q-quantile of per-client gradient norms over
/// `rounds` fresh client rounds at the fixed basis `b` (the "auto-quantile"
/// alternative to the closed-form recipe).
double auto_quantile_zeta(const FrlProblem& problem, const OrthonormalBasis& b,
                          int mbar, int rounds, double quantile,
                          std::uint64_t seed);

}  // namespace centaur
