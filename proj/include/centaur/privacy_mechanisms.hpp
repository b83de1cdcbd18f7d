#pragma once

#include <vector>

#include <Eigen/Core>

#include "centaur/random_stream.hpp"

namespace centaur {

/// Result of norm clipping, with telemetry for clip-rate accounting.
struct ClipResult {
  Eigen::MatrixXd value;  // x * min{1, zeta / ||x||}
  bool was_clipped = false;
  double pre_norm = 0.0;  // Euclidean / Frobenius norm before clipping
};

/// x * min{1, zeta / ||x||}. Vectors are one-column (or one-row) matrices;
/// the norm is Frobenius either way. Zero input is returned unchanged.
ClipResult clip(const Eigen::MatrixXd& x, double zeta);

/// Clip threshold and noise multiplier of the Gaussian mechanism. An infinite
/// threshold is allowed only in the non-private ablation (sigma == 0); the
/// accountant refuses to account such runs.
struct GaussianMechanismParams {
  double clip_threshold = 0.0;   // zeta
  double noise_multiplier = 0.0; // sigma, noise std is sigma * zeta per entry

  bool is_non_private() const { return noise_multiplier == 0.0; }
  void validate() const;  // throws ParameterError
};

struct MechanismResult {
  Eigen::MatrixXd output;
  int clip_count = 0;
};

/// (1/s) * (sum_i clip(x_i; zeta) + sigma * zeta * W), W i.i.d. standard normal
/// drawn entrywise in row-major order. Inputs are summed in their given order
/// so repeated calls with the same stream state are bit-identical.
MechanismResult gaussian_mechanism(const std::vector<Eigen::MatrixXd>& inputs,
                                   const GaussianMechanismParams& params,
                                   RandomStream& noise_stream);

/// Includes each index in {0..n-1} independently with probability p, decided
/// in ascending order from the stream; the result is sorted ascending.
std::vector<int> poisson_sample_clients(int n, double p, RandomStream& sampling_stream);

}  // namespace centaur
