#pragma once

#include <vector>

namespace centaur {

/// Two user-level adjacency conventions for the averaged Gaussian mechanism.
/// Replacing a user's dataset moves the clipped sum by up to 2*zeta (sensitivity
/// 2*zeta/|C|); adding or removing one moves it by up to zeta (zeta/|C|).
enum class Adjacency {
  replace_one_user,
  add_remove_user,
};

/// Sensitivity expressed as a multiple of zeta/|C| for the given adjacency.
double sensitivity_multiple(Adjacency adjacency);

/// Renyi-DP spend tabulated on an ascending grid of orders alpha > 1.
struct RdpCurve {
  std::vector<double> alpha_grid;
  std::vector<double> epsilon_at;

  bool empty() const { return alpha_grid.empty(); }
};

/// Integers 2..64 plus {128, 256, 512}; covers the conversion minimum for
/// desk-scale noise multipliers and round counts.
std::vector<double> default_alpha_grid();

/// RDP of the Gaussian mechanism: alpha * delta^2 / (2 * s^2).
double gaussian_rdp(double alpha, double sensitivity, double noise_std);

/// RDP of the Poisson-subsampled Gaussian mechanism at integer order alpha:
/// (1/(alpha-1)) * log E_alpha with E_alpha = integral (d nu / d nu')^alpha d nu',
/// nu = N(0, sigma^2), nu' = (1-p) N(0, sigma^2) + p N(1, sigma^2). Evaluated by
/// adaptive Gauss-Kronrod quadrature on a tanh-mapped axis with log-domain
/// accumulation, relative tolerance 1e-10. p = 0 returns exactly 0; p = 1 agrees
/// with alpha / (2 sigma^2) to 1e-9.
double subsampled_gaussian_rdp(int alpha, double p, double sigma);

namespace detail {
/// Same divergence with the shifted component at `shift` instead of 1; used to
/// account subsampled rounds under the replace-one sensitivity convention.
double subsampled_gaussian_rdp_shifted(int alpha, double p, double sigma, double shift);
}  // namespace detail

/// Pointwise sum over a shared alpha grid (additive RDP composition).
RdpCurve compose(const std::vector<RdpCurve>& curves);

struct DpConversion {
  double eps_dp = 0.0;
  double best_alpha = 0.0;
};

/// min over the grid of eps(alpha) + log(1/delta)/(alpha - 1), smallest alpha
/// winning ties.
DpConversion rdp_to_dp(const RdpCurve& curve, double delta);

/// Closed-form (eps, delta)-DP budget of the main loop: 2 sqrt(T_g log(1/delta)) / sigma_g.
double centaur_dp_budget(double t_g, double sigma_g, double delta);

/// Inverse of the closed form: the sigma_g that meets eps_dp_target.
double calibrate_sigma(double eps_dp_target, double t_g, double delta);

/// One round of the (subsampled) Gaussian mechanism on the given grid.
RdpCurve per_round_curve(double p_g, double sigma_g, Adjacency adjacency,
                         const std::vector<double>& alpha_grid = default_alpha_grid());

/// Spend of the initialization phase: T0 trials of L mechanism rounds each at
/// noise multiplier sigma0; candidate selection is post-processing and free.
RdpCurve init_rdp_curve(int t0, int power_iterations, double sigma0, Adjacency adjacency,
                        const std::vector<double>& alpha_grid = default_alpha_grid());

/// Accumulated main-loop and initialization spend for one run.
struct PrivacyLedger {
  RdpCurve main_curve;
  RdpCurve init_curve;
  double delta = 0.0;
  Adjacency adjacency = Adjacency::replace_one_user;
  int main_rounds = 0;

  static PrivacyLedger create(double delta, Adjacency adjacency,
                              const std::vector<double>& alpha_grid = default_alpha_grid());

  void charge_round(const RdpCurve& round_curve);
  void charge_init(const RdpCurve& init_curve_in);

  /// Pointwise total of init and main spend.
  RdpCurve total() const;
  DpConversion to_dp() const;
};

}  // namespace centaur
