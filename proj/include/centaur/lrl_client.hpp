#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "centaur/metrics.hpp"
#include "centaur/random_stream.hpp"
#include "centaur/synthetic_lrl.hpp"

namespace centaur {

/// Client-side personalized head. Never transmitted; kept out of ClientUpdate.
struct LocalHead {
  Eigen::VectorXd w;
  bool used_ridge = false;  // set when the Gram matrix needed regularisation
};

/// One client's contribution to a round. Exactly these four fields: the head
/// itself is not representable here.
struct ClientUpdate {
  Eigen::MatrixXd payload;  // gradient (LRL) or local drift (general client)
  double pre_clip_norm = 0.0;
  int client_id = 0;
  int round = 0;
};

/// m̄-subset of {0..m-1} without replacement (partial Fisher-Yates), sorted.
std::vector<int> sample_without_replacement(int m, int count, RandomStream& stream);

/// Two disjoint m̄-subsets from a single partial Fisher-Yates shuffle of
/// {0..m-1}: the first m̄ positions form S1, the next m̄ form S2. Sorted.
std::pair<std::vector<int>, std::vector<int>> sample_disjoint_subsets(
    int m, int mbar, RandomStream& stream);

/// Least-squares head over projected features z = B^T x via the k x k normal
/// equations. A Gram condition number above 1e12 triggers a ridge of
/// 1e-9 * trace / k and flags the result.
LocalHead solve_local_head(const OrthonormalBasis& b, const ClientDataset& data,
                           std::span<const int> idx);
LocalHead solve_local_head(const OrthonormalBasis& b, const ClientDataset& data);

/// Gradient of the local least-squares objective with respect to B at fixed w:
/// (1/|idx|) * sum_j (<B^T x_j, w> - y_j) x_j w^T, summed in dataset index order.
Eigen::MatrixXd rep_gradient(const OrthonormalBasis& b, const LocalHead& head,
                             const ClientDataset& data, std::span<const int> idx);

/// Gradient of the objective with respect to w at fixed B (head optimality checks).
Eigen::VectorXd head_gradient(const OrthonormalBasis& b, const LocalHead& head,
                              const ClientDataset& data, std::span<const int> idx);

/// Full client round in the linear case: sample disjoint S1/S2, solve the head
/// on S1, return the representation gradient on S2. The head stays local.
ClientUpdate lrl_client_round(const OrthonormalBasis& b_t, const ClientDataset& data,
                              int mbar, int client_id, int round, RandomStream& stream);

/// Local-model abstraction for the general client: loss plus gradients with
/// respect to the head and the representation parameters.
class LocalModel {
 public:
  virtual ~LocalModel() = default;
  virtual double loss(const Eigen::MatrixXd& rep, const Eigen::VectorXd& head,
                      const ClientDataset& data, std::span<const int> idx) const = 0;
  virtual Eigen::VectorXd head_gradient(const Eigen::MatrixXd& rep,
                                        const Eigen::VectorXd& head,
                                        const ClientDataset& data,
                                        std::span<const int> idx) const = 0;
  virtual Eigen::MatrixXd rep_gradient(const Eigen::MatrixXd& rep,
                                       const Eigen::VectorXd& head,
                                       const ClientDataset& data,
                                       std::span<const int> idx) const = 0;
  virtual int head_dim(const Eigen::MatrixXd& rep) const = 0;

  /// Phase-1 head fit. Default: full-batch gradient descent for head_epochs
  /// steps. No optimality claim is made here; models may override with an
  /// exact solve.
  virtual Eigen::VectorXd fit_head(const Eigen::MatrixXd& rep, const ClientDataset& data,
                                   std::span<const int> idx, int head_epochs,
                                   double eta) const;
};

/// Linear model: squared loss on w^T B^T x; exact normal-equations head fit.
class LinearLocalModel : public LocalModel {
 public:
  double loss(const Eigen::MatrixXd& rep, const Eigen::VectorXd& head,
              const ClientDataset& data, std::span<const int> idx) const override;
  Eigen::VectorXd head_gradient(const Eigen::MatrixXd& rep, const Eigen::VectorXd& head,
                                const ClientDataset& data,
                                std::span<const int> idx) const override;
  Eigen::MatrixXd rep_gradient(const Eigen::MatrixXd& rep, const Eigen::VectorXd& head,
                               const ClientDataset& data,
                               std::span<const int> idx) const override;
  int head_dim(const Eigen::MatrixXd& rep) const override;
  Eigen::VectorXd fit_head(const Eigen::MatrixXd& rep, const ClientDataset& data,
                           std::span<const int> idx, int head_epochs,
                           double eta) const override;
};

/// General client round: fit the head on the full local dataset, then run T_l
/// mini-batch gradient steps on the representation from b_t; the payload is
/// the drift b^{T_l} - b_t.
ClientUpdate general_client_round(const Eigen::MatrixXd& b_t, const LocalModel& model,
                                  const ClientDataset& data, int mbar, int t_l,
                                  double eta_l, int head_epochs, int client_id,
                                  int round, RandomStream& stream);

}  // namespace centaur
