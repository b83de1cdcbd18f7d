#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "centaur/metrics.hpp"
#include "centaur/random_stream.hpp"

namespace centaur {

/// Ground-truth linear representation: column-orthonormal B* and per-client
/// optimal heads W* (rows). Singular values refer to W* / sqrt(n).
struct GroundTruth {
  OrthonormalBasis b_star;
  Eigen::MatrixXd w_star;             // n x k, row i is client i's head
  Eigen::VectorXd singular_values;    // of W* / sqrt(n), descending, s_k = 1
  double kappa = 1.0;                 // s_1 / s_k
  double mu = 1.0;                    // realized incoherence: tightest constant
                                      // with max_i ||W*_{i,:}|| <= mu sqrt(k) s_k
};

/// One client's local dataset; responses are exactly consistent with the truth.
struct ClientDataset {
  Eigen::MatrixXd inputs;    // m x d, row j is x_ij
  Eigen::VectorXd responses; // m

  Eigen::Index size() const { return inputs.rows(); }
};

struct ProblemDims {
  int d = 0;
  int k = 0;
  int n = 0;
  int m = 0;
};

struct FrlProblem {
  GroundTruth truth;
  std::vector<ClientDataset> clients;
  ProblemDims dims;
};

/// The exact response expression used by the generator; tests recompute it
/// bit-identically.
double response_for(const GroundTruth& truth, int client, const Eigen::VectorXd& x);

/// Haar B*, and W* = sqrt(n) U diag(s) V^T with a geometric spectrum from
/// s_k = 1 up to s_1 = kappa_target. U is resampled (up to 1000 attempts) until
/// max_i ||W*_{i,:}|| <= mu_target * sqrt(k) * s_k.
GroundTruth gen_ground_truth(int d, int k, int n, double kappa_target,
                             double mu_target, RandomStream& stream);

/// m i.i.d. standard normal inputs with noiseless responses for client `client`.
ClientDataset gen_client_data(const GroundTruth& truth, int client, int m,
                              RandomStream& stream);

/// Deterministic problem for a master seed; clients use derived sub-streams in
/// ascending index order.
FrlProblem gen_problem(int d, int k, int n, int m, double kappa_target,
                       double mu_target, std::uint64_t seed);

/// Portable dump: JSON with base64-encoded little-endian float64 arrays.
/// Round trips bit-exactly.
nlohmann::json problem_to_json(const FrlProblem& problem);
FrlProblem problem_from_json(const nlohmann::json& j);

}  // namespace centaur
