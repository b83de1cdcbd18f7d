#include "centaur/privacy_mechanisms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "centaur/errors.hpp"

namespace centaur {

ClipResult clip(const Eigen::MatrixXd& x, double zeta) {
  if (!(zeta > 0.0)) throw ParameterError("clip: threshold must be positive");
  if (!x.allFinite()) throw InputError("clip: non-finite entries in input");
  ClipResult out;
  out.pre_norm = x.norm();
  // 1e-12 relative slack keeps clipping idempotent under rounding.
  out.was_clipped = out.pre_norm > zeta * (1.0 + 1e-12);
  out.value = out.was_clipped ? Eigen::MatrixXd(x * (zeta / out.pre_norm)) : x;
  return out;
}

void GaussianMechanismParams::validate() const {
  if (!(clip_threshold > 0.0))
    throw ParameterError("gaussian mechanism: clip threshold must be positive");
  if (!(noise_multiplier >= 0.0))
    throw ParameterError("gaussian mechanism: noise multiplier must be >= 0");
  if (std::isinf(clip_threshold) && noise_multiplier != 0.0)
    throw ParameterError(
        "gaussian mechanism: infinite clip threshold is only valid with sigma == 0");
}

MechanismResult gaussian_mechanism(const std::vector<Eigen::MatrixXd>& inputs,
                                   const GaussianMechanismParams& params,
                                   RandomStream& noise_stream) {
  params.validate();
  if (inputs.empty()) throw ParameterError("gaussian mechanism: empty input list");
  const Eigen::Index rows = inputs.front().rows();
  const Eigen::Index cols = inputs.front().cols();
  MechanismResult out;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& x : inputs) {
    if (x.rows() != rows || x.cols() != cols)
      throw InputError("gaussian mechanism: input shape mismatch");
    ClipResult c = clip(x, params.clip_threshold);
    if (c.was_clipped) ++out.clip_count;
    acc += c.value;
  }
  if (params.noise_multiplier > 0.0) {
    acc += params.noise_multiplier * params.clip_threshold *
           noise_stream.normal_matrix(rows, cols);
  }
  out.output = acc / static_cast<double>(inputs.size());
  return out;
}

std::vector<int> poisson_sample_clients(int n, double p, RandomStream& sampling_stream) {
  if (n < 0) throw ParameterError("poisson_sample_clients: n must be >= 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError("poisson_sample_clients: p must lie in [0, 1]");
  std::vector<int> active;
  for (int i = 0; i < n; ++i) {
    if (sampling_stream.uniform() < p) active.push_back(i);
  }
  return active;
}

}  // namespace centaur
