#include "centaur/centaur_server.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "centaur/errors.hpp"
#include "centaur/parallel.hpp"

namespace centaur {

Eigen::MatrixXd aggregate_additive(const Eigen::MatrixXd& b, const Eigen::MatrixXd& g,
                                   double eta_g) {
  if (b.rows() != g.rows() || b.cols() != g.cols())
    throw InputError("aggregate_additive: shape mismatch");
  return b + eta_g * g;
}

OrthonormalBasis aggregate_qr(const OrthonormalBasis& b, const Eigen::MatrixXd& g,
                              double eta_g) {
  if (b.rows() != g.rows() || b.cols() != g.cols())
    throw InputError("aggregate_qr: shape mismatch");
  if (!(b.orthonormality_defect() <= 1e-8))
    throw InputError("aggregate_qr: state is not orthonormal");
  return OrthonormalBasis::from_qr(b.data() - eta_g * g);
}

ServerTrace run_centaur(const FrlProblem& problem, const ServerConfig& server,
                        const ClientConfig& client, const OrthonormalBasis& b0,
                        PrivacyLedger* ledger, std::uint64_t master_seed,
                        int client_threads) {
  server.gm.validate();
  if (!(server.p_g >= 0.0 && server.p_g <= 1.0))
    throw ParameterError("run_centaur: p_g must lie in [0, 1]");
  if (server.t_g < 0) throw ParameterError("run_centaur: T_g must be >= 0");
  if (!(server.eta_g > 0.0)) throw ParameterError("run_centaur: eta_g must be > 0");
  const bool is_private = server.gm.noise_multiplier > 0.0;
  if (is_private && ledger == nullptr)
    throw ParameterError("run_centaur: private run requires a privacy ledger");
  if (!is_private && ledger != nullptr)
    throw ParameterError("run_centaur: refusing to account a non-private run");

  const int n = problem.dims.n;
  RdpCurve round_curve;
  if (ledger != nullptr)
    round_curve = per_round_curve(server.p_g, server.gm.noise_multiplier,
                                  ledger->adjacency, ledger->main_curve.alpha_grid);

  const LinearLocalModel linear_model;
  ServerTrace trace;
  trace.rounds.reserve(server.t_g);
  Eigen::MatrixXd state = b0.data();

  for (int t = 0; t < server.t_g; ++t) {
    RandomStream sampling = derive_stream(master_seed, StreamDomain::sampling, t, 0);
    const std::vector<int> active = poisson_sample_clients(n, server.p_g, sampling);

    std::vector<Eigen::MatrixXd> payloads(active.size());
    OrthonormalBasis basis_view;
    if (client.mode == ClientMode::lrl)
      basis_view = OrthonormalBasis::from_matrix(state);
    parallel_for(static_cast<int>(active.size()), client_threads, [&](int a) {
      const int i = active[a];
      RandomStream stream = derive_stream(master_seed, StreamDomain::client_round, t, i);
      ClientUpdate update =
          client.mode == ClientMode::lrl
              ? lrl_client_round(basis_view, problem.clients[i], client.mbar, i, t,
                                 stream)
              : general_client_round(state, linear_model, problem.clients[i],
                                     client.mbar, client.t_l, client.eta_l,
                                     client.head_epochs, i, t, stream);
      payloads[a] = std::move(update.payload);
    });

    RoundRecord record;
    record.round = t;
    record.active_clients = static_cast<int>(active.size());
    if (!active.empty()) {
      RandomStream noise =
          derive_stream(master_seed, StreamDomain::mechanism_noise, t, 0);
      MechanismResult mech = gaussian_mechanism(payloads, server.gm, noise);
      record.clip_count = mech.clip_count;
      record.grad_norm = mech.output.norm();
      // LRL payloads are gradients (descend); general payloads are drifts (add).
      const double direction = client.mode == ClientMode::lrl ? -1.0 : 1.0;
      if (server.aggregation == AggregationMode::qr_retraction) {
        state = aggregate_qr(OrthonormalBasis::from_matrix(state),
                             -direction * mech.output, server.eta_g)
                    .data();
      } else {
        state = aggregate_additive(state, direction * mech.output, server.eta_g);
      }
      if (!state.allFinite())
        throw NumericError("run_centaur: non-finite state after round " +
                           std::to_string(t));
    }
    if (ledger != nullptr) ledger->charge_round(round_curve);
    // Additive general-mode states drift off the manifold; measure the spanned
    // subspace after re-orthonormalisation.
    const OrthonormalBasis measured =
        server.aggregation == AggregationMode::qr_retraction
            ? OrthonormalBasis::from_matrix(state)
            : OrthonormalBasis::from_qr(state);
    record.dist_to_truth = principal_angle_dist(measured, problem.truth.b_star);
    trace.rounds.push_back(record);
  }
  trace.final_state = std::move(state);
  return trace;
}

Recipe parameter_recipe(const GroundTruth& truth, double sigma_g, int n, int d, int k,
                        const RecipeConstants& constants) {
  if (n < 2 || d < 1 || k < 1) throw ParameterError("parameter_recipe: bad dimensions");
  if (!(sigma_g >= 0.0)) throw ParameterError("parameter_recipe: sigma_g must be >= 0");
  const double s1 = truth.singular_values(0);
  const double sk = truth.singular_values(truth.singular_values.size() - 1);
  Recipe recipe;
  recipe.zeta_g = constants.c_zeta * truth.mu * truth.mu * k * sk * sk *
                  std::sqrt(static_cast<double>(d) * k * std::log(static_cast<double>(n)));
  recipe.eta_g = 1.0 / (4.0 * s1 * s1);
  // Rounds to contract from the initialization radius down to the noise floor:
  // kappa^2 log of the floor's reciprocal. The contraction argument needs the
  // round count to grow as the floor shrinks, so the log argument is
  // n / (kappa^2 eta zeta sigma sqrt(d)), the inverse of the floor scale.
  recipe.t_g = 1;
  if (sigma_g > 0.0) {
    const double floor_scale = truth.kappa * truth.kappa * recipe.eta_g *
                               recipe.zeta_g * sigma_g *
                               std::sqrt(static_cast<double>(d)) /
                               static_cast<double>(n);
    const double log_arg = 1.0 / floor_scale;
    if (log_arg > 1.0)
      recipe.t_g = std::max(
          1, static_cast<int>(std::ceil(constants.c_t * truth.kappa * truth.kappa *
                                        std::log(log_arg))));
  }
  return recipe;
}

double auto_quantile_zeta(const FrlProblem& problem, const OrthonormalBasis& b,
                          int mbar, int rounds, double quantile, std::uint64_t seed) {
  if (rounds < 1) throw ParameterError("auto_quantile_zeta: rounds must be >= 1");
  if (!(quantile > 0.0 && quantile <= 1.0))
    throw ParameterError("auto_quantile_zeta: quantile must lie in (0, 1]");
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(rounds) * problem.dims.n);
  for (int t = 0; t < rounds; ++t) {
    for (int i = 0; i < problem.dims.n; ++i) {
      RandomStream stream = derive_stream(seed, StreamDomain::client_round, t, i);
      norms.push_back(
          lrl_client_round(b, problem.clients[i], mbar, i, t, stream).pre_clip_norm);
    }
  }
  std::sort(norms.begin(), norms.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(norms.size())));
  return norms[std::min(norms.size() - 1, std::max<std::size_t>(rank, 1) - 1)];
}

}  // namespace centaur
