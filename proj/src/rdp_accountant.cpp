#include "centaur/rdp_accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "centaur/errors.hpp"

namespace centaur {

double sensitivity_multiple(Adjacency adjacency) {
  return adjacency == Adjacency::replace_one_user ? 2.0 : 1.0;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int a = 2; a <= 64; ++a) grid.push_back(static_cast<double>(a));
  grid.push_back(128.0);
  grid.push_back(256.0);
  grid.push_back(512.0);
  return grid;
}

double gaussian_rdp(double alpha, double sensitivity, double noise_std) {
  if (!(alpha > 1.0)) throw ParameterError("gaussian_rdp: alpha must be > 1");
  if (!(sensitivity > 0.0)) throw ParameterError("gaussian_rdp: sensitivity must be > 0");
  if (!(noise_std > 0.0)) throw ParameterError("gaussian_rdp: noise std must be > 0");
  return alpha * sensitivity * sensitivity / (2.0 * noise_std * noise_std);
}

namespace {

// Log-density pieces of the E_alpha integrand, all in the log domain so that
// astronomically peaked integrands (large alpha, small sigma) stay finite.
struct LogIntegrand {
  double alpha;
  double p;
  double sigma;
  double shift;

  double log_gauss(double x, double mean) const {
    const double z = (x - mean) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  }

  double operator()(double x) const {
    const double lp0 = log_gauss(x, 0.0);
    double lmix;
    if (p >= 1.0) {
      lmix = log_gauss(x, shift);
    } else {
      const double a = std::log1p(-p) + lp0;
      const double b = std::log(p) + log_gauss(x, shift);
      const double m = std::max(a, b);
      lmix = m + std::log(std::exp(a - m) + std::exp(b - m));
    }
    return alpha * lp0 + (1.0 - alpha) * lmix;
  }
};

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
constexpr double kKronrodNodes[15] = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
constexpr double kKronrodWeights[15] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
constexpr double kGaussWeights[7] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

// Integrand after the tanh substitution x = center + scale * atanh(u),
// rescaled by exp(-log_max) so values stay in a safe range.
struct MappedIntegrand {
  const LogIntegrand& log_f;
  double center;
  double scale;
  double log_max;

  double operator()(double u) const {
    const double one_minus_u2 = (1.0 - u) * (1.0 + u);
    if (!(one_minus_u2 > 0.0)) return 0.0;
    const double x = center + scale * std::atanh(u);
    const double t = log_f(x) - log_max + std::log(scale) - std::log(one_minus_u2);
    return t < -745.0 ? 0.0 : std::exp(t);
  }
};

struct GkEstimate {
  double integral;
  double error;
};

GkEstimate gauss_kronrod_15(const MappedIntegrand& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double kronrod = 0.0;
  double gauss = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(mid + half * kKronrodNodes[i]);
    kronrod += kKronrodWeights[i] * v;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * v;
  }
  kronrod *= half;
  gauss *= half;
  return GkEstimate{kronrod, std::abs(kronrod - gauss)};
}

// Global adaptive refinement on [-1, 1]: repeatedly bisect the segment with
// the largest error estimate until the summed error meets the relative
// tolerance (or the rounding floor of the running total).
double integrate_mapped(const MappedIntegrand& f, double rel_tol) {
  struct Segment {
    double a, b;
    GkEstimate est;
    bool operator<(const Segment& other) const { return est.error < other.est.error; }
  };
  std::priority_queue<Segment> queue;
  queue.push({-1.0, 1.0, gauss_kronrod_15(f, -1.0, 1.0)});
  double total = queue.top().est.integral;
  double total_error = queue.top().est.error;
  constexpr int kMaxBisections = 100000;
  for (int step = 0; step < kMaxBisections; ++step) {
    const double scale = std::max(std::abs(total), 1e-300);
    if (total_error <= std::max(rel_tol, 2e-14) * scale) break;
    const Segment worst = queue.top();
    if (worst.b - worst.a < 1e-14) break;  // resolution floor
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left{worst.a, mid, gauss_kronrod_15(f, worst.a, mid)};
    const Segment right{mid, worst.b, gauss_kronrod_15(f, mid, worst.b)};
    total += left.est.integral + right.est.integral - worst.est.integral;
    total_error += left.est.error + right.est.error - worst.est.error;
    queue.push(left);
    queue.push(right);
  }
  if (!(total_error <= 1e3 * std::max(rel_tol, 2e-14) * std::max(std::abs(total), 1e-300)))
    throw NumericError("subsampled_gaussian_rdp: quadrature did not converge");
  return total;
}

// Locate the maximum of the log-integrand: coarse scan over the bracket that
// contains every candidate peak, then ternary refinement around the best cell.
struct Peak {
  double x;
  double value;
};

Peak locate_peak(const LogIntegrand& f, double lo, double hi) {
  constexpr int kScan = 8192;
  double best_x = lo;
  double best_v = -std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / kScan;
  for (int i = 0; i <= kScan; ++i) {
    const double x = lo + step * i;
    const double v = f(x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  double a = best_x - step;
  double b = best_x + step;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      a = m1;
    else
      b = m2;
  }
  const double x = 0.5 * (a + b);
  return Peak{x, f(x)};
}

double subsampled_rdp_impl(int alpha, double p, double sigma, double shift) {
  if (alpha < 2) throw ParameterError("subsampled_gaussian_rdp: alpha must be >= 2");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError("subsampled_gaussian_rdp: p must lie in [0, 1]");
  if (!(sigma > 0.0)) throw ParameterError("subsampled_gaussian_rdp: sigma must be > 0");
  if (p == 0.0) return 0.0;

  const LogIntegrand log_f{static_cast<double>(alpha), p, sigma, shift};
  // Candidate peaks sit near 0 (unshifted branch) and near (1 - alpha) * shift
  // (shifted branch); bracket both with generous sigma margins.
  const double left_anchor = std::min(0.0, (1.0 - alpha) * shift);
  const double lo = left_anchor - 12.0 * sigma - 2.0 * std::abs(shift) - 1.0;
  const double hi = std::max(0.0, shift) + 12.0 * sigma + 1.0;
  const Peak peak = locate_peak(log_f, lo, hi);

  const MappedIntegrand mapped{log_f, peak.x, std::max(sigma, 1e-3), peak.value};
  const double integral = integrate_mapped(mapped, 1e-10);
  if (!(integral > 0.0))
    throw NumericError("subsampled_gaussian_rdp: quadrature returned non-positive mass");
  const double eps = (peak.value + std::log(integral)) / (alpha - 1.0);
  if (eps < -1e-9)
    throw NumericError("subsampled_gaussian_rdp: negative divergence");
  return std::max(0.0, eps);
}

}  // namespace

double subsampled_gaussian_rdp(int alpha, double p, double sigma) {
  return subsampled_rdp_impl(alpha, p, sigma, 1.0);
}

namespace detail {
double subsampled_gaussian_rdp_shifted(int alpha, double p, double sigma, double shift) {
  if (!(shift > 0.0))
    throw ParameterError("subsampled_gaussian_rdp_shifted: shift must be > 0");
  return subsampled_rdp_impl(alpha, p, sigma, shift);
}
}  // namespace detail

RdpCurve compose(const std::vector<RdpCurve>& curves) {
  if (curves.empty()) throw ParameterError("compose: need at least one curve");
  RdpCurve out = curves.front();
  for (std::size_t c = 1; c < curves.size(); ++c) {
    const RdpCurve& cur = curves[c];
    if (cur.alpha_grid != out.alpha_grid)
      throw ParameterError("compose: alpha grid mismatch");
    for (std::size_t i = 0; i < out.epsilon_at.size(); ++i)
      out.epsilon_at[i] += cur.epsilon_at[i];
  }
  return out;
}

DpConversion rdp_to_dp(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("rdp_to_dp: delta must lie in (0, 1)");
  if (curve.empty()) throw ParameterError("rdp_to_dp: empty curve");
  const double log_inv_delta = std::log(1.0 / delta);
  DpConversion best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < curve.alpha_grid.size(); ++i) {
    const double alpha = curve.alpha_grid[i];
    const double candidate = curve.epsilon_at[i] + log_inv_delta / (alpha - 1.0);
    if (candidate < best.eps_dp) {
      best.eps_dp = candidate;
      best.best_alpha = alpha;
    }
  }
  return best;
}

double centaur_dp_budget(double t_g, double sigma_g, double delta) {
  if (!(t_g >= 1.0)) throw ParameterError("centaur_dp_budget: T_g must be >= 1");
  if (!(sigma_g > 0.0)) throw ParameterError("centaur_dp_budget: sigma_g must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("centaur_dp_budget: delta must lie in (0, 1)");
  return 2.0 * std::sqrt(t_g * std::log(1.0 / delta)) / sigma_g;
}

double calibrate_sigma(double eps_dp_target, double t_g, double delta) {
  if (!(eps_dp_target > 0.0))
    throw ParameterError("calibrate_sigma: target epsilon must be > 0");
  if (!(t_g >= 1.0)) throw ParameterError("calibrate_sigma: T_g must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("calibrate_sigma: delta must lie in (0, 1)");
  return 2.0 * std::sqrt(t_g * std::log(1.0 / delta)) / eps_dp_target;
}

RdpCurve per_round_curve(double p_g, double sigma_g, Adjacency adjacency,
                         const std::vector<double>& alpha_grid) {
  if (!(p_g >= 0.0 && p_g <= 1.0))
    throw ParameterError("per_round_curve: p_g must lie in [0, 1]");
  if (!(sigma_g > 0.0)) throw ParameterError("per_round_curve: sigma_g must be > 0");
  const double c = sensitivity_multiple(adjacency);
  RdpCurve out;
  out.alpha_grid = alpha_grid;
  out.epsilon_at.reserve(alpha_grid.size());
  for (double alpha : alpha_grid) {
    if (p_g == 1.0) {
      // Sensitivity c * zeta / |C| against noise std sigma * zeta / |C|.
      out.epsilon_at.push_back(gaussian_rdp(alpha, c, sigma_g));
    } else {
      out.epsilon_at.push_back(detail::subsampled_gaussian_rdp_shifted(
          static_cast<int>(std::llround(alpha)), p_g, sigma_g, c));
    }
  }
  return out;
}

RdpCurve init_rdp_curve(int t0, int power_iterations, double sigma0, Adjacency adjacency,
                        const std::vector<double>& alpha_grid) {
  if (t0 < 1) throw ParameterError("init_rdp_curve: T0 must be >= 1");
  if (power_iterations < 1) throw ParameterError("init_rdp_curve: L must be >= 1");
  if (!(sigma0 > 0.0)) throw ParameterError("init_rdp_curve: sigma0 must be > 0");
  const double c = sensitivity_multiple(adjacency);
  const double rounds = static_cast<double>(t0) * power_iterations;
  RdpCurve out;
  out.alpha_grid = alpha_grid;
  out.epsilon_at.reserve(alpha_grid.size());
  for (double alpha : alpha_grid)
    out.epsilon_at.push_back(rounds * gaussian_rdp(alpha, c, sigma0));
  return out;
}

PrivacyLedger PrivacyLedger::create(double delta, Adjacency adjacency,
                                    const std::vector<double>& alpha_grid) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("PrivacyLedger: delta must lie in (0, 1)");
  PrivacyLedger ledger;
  ledger.delta = delta;
  ledger.adjacency = adjacency;
  ledger.main_curve.alpha_grid = alpha_grid;
  ledger.main_curve.epsilon_at.assign(alpha_grid.size(), 0.0);
  ledger.init_curve.alpha_grid = alpha_grid;
  ledger.init_curve.epsilon_at.assign(alpha_grid.size(), 0.0);
  return ledger;
}

void PrivacyLedger::charge_round(const RdpCurve& round_curve) {
  main_curve = compose({main_curve, round_curve});
  ++main_rounds;
}

void PrivacyLedger::charge_init(const RdpCurve& init_curve_in) {
  init_curve = compose({init_curve, init_curve_in});
}

RdpCurve PrivacyLedger::total() const {
  return compose({init_curve, main_curve});
}

DpConversion PrivacyLedger::to_dp() const {
  return rdp_to_dp(total(), delta);
}

}  // namespace centaur
