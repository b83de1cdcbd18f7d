#include "centaur/lrl_client.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "centaur/errors.hpp"

namespace centaur {

std::vector<int> sample_without_replacement(int m, int count, RandomStream& stream) {
  if (count < 0 || count > m)
    throw ParameterError("sample_without_replacement: need 0 <= count <= m");
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(stream.uniform_below(m - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> out(perm.begin(), perm.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<std::vector<int>, std::vector<int>> sample_disjoint_subsets(
    int m, int mbar, RandomStream& stream) {
  if (mbar < 1) throw ParameterError("sample_disjoint_subsets: mbar must be >= 1");
  if (2 * mbar > m)
    throw ParameterError("sample_disjoint_subsets: need 2 * mbar <= m");
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < 2 * mbar; ++i) {
    const int j = i + static_cast<int>(stream.uniform_below(m - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> s1(perm.begin(), perm.begin() + mbar);
  std::vector<int> s2(perm.begin() + mbar, perm.begin() + 2 * mbar);
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  return {std::move(s1), std::move(s2)};
}

namespace {

void check_subset(const ClientDataset& data, std::span<const int> idx, const char* where) {
  if (idx.empty()) throw ParameterError(std::string(where) + ": empty subset");
  for (int j : idx) {
    if (j < 0 || j >= data.size())
      throw InputError(std::string(where) + ": index out of range");
  }
}

std::vector<int> all_indices(const ClientDataset& data) {
  std::vector<int> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

LocalHead solve_head_normal_equations(const Eigen::MatrixXd& rep,
                                      const ClientDataset& data,
                                      std::span<const int> idx) {
  check_subset(data, idx, "solve_local_head");
  const Eigen::Index k = rep.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (int j : idx) {
    const Eigen::VectorXd z = rep.transpose() * data.inputs.row(j).transpose();
    gram.noalias() += z * z.transpose();
    rhs.noalias() += z * data.responses(j);
  }
  LocalHead head;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (!(lambda_min > 0.0) || lambda_max > 1e12 * lambda_min) {
    gram.diagonal().array() += 1e-9 * gram.trace() / static_cast<double>(k);
    head.used_ridge = true;
  }
  head.w = gram.ldlt().solve(rhs);
  if (!head.w.allFinite()) throw InputError("solve_local_head: non-finite data");
  return head;
}

}  // namespace

LocalHead solve_local_head(const OrthonormalBasis& b, const ClientDataset& data,
                           std::span<const int> idx) {
  return solve_head_normal_equations(b.data(), data, idx);
}

LocalHead solve_local_head(const OrthonormalBasis& b, const ClientDataset& data) {
  const std::vector<int> idx = all_indices(data);
  return solve_local_head(b, data, idx);
}

Eigen::MatrixXd rep_gradient(const OrthonormalBasis& b, const LocalHead& head,
                             const ClientDataset& data, std::span<const int> idx) {
  check_subset(data, idx, "rep_gradient");
  const Eigen::Index d = b.rows();
  // G = (1/mbar) * (sum_j r_j x_j) w^T, accumulated in index order.
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(d);
  for (int j : idx) {
    const Eigen::VectorXd x = data.inputs.row(j).transpose();
    const double residual = head.w.dot(b.data().transpose() * x) - data.responses(j);
    weighted.noalias() += residual * x;
  }
  Eigen::MatrixXd g =
      (weighted / static_cast<double>(idx.size())) * head.w.transpose();
  if (!g.allFinite()) throw InputError("rep_gradient: non-finite data");
  return g;
}

Eigen::VectorXd head_gradient(const OrthonormalBasis& b, const LocalHead& head,
                              const ClientDataset& data, std::span<const int> idx) {
  check_subset(data, idx, "head_gradient");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(b.cols());
  for (int j : idx) {
    const Eigen::VectorXd z = b.data().transpose() * data.inputs.row(j).transpose();
    g.noalias() += (head.w.dot(z) - data.responses(j)) * z;
  }
  return g / static_cast<double>(idx.size());
}

ClientUpdate lrl_client_round(const OrthonormalBasis& b_t, const ClientDataset& data,
                              int mbar, int client_id, int round, RandomStream& stream) {
  auto [s1, s2] = sample_disjoint_subsets(static_cast<int>(data.size()), mbar, stream);
  const LocalHead head = solve_local_head(b_t, data, s1);
  ClientUpdate update;
  update.payload = rep_gradient(b_t, head, data, s2);
  update.pre_clip_norm = update.payload.norm();
  update.client_id = client_id;
  update.round = round;
  return update;
}

Eigen::VectorXd LocalModel::fit_head(const Eigen::MatrixXd& rep, const ClientDataset& data,
                                     std::span<const int> idx, int head_epochs,
                                     double eta) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(head_dim(rep));
  for (int e = 0; e < head_epochs; ++e) w -= eta * head_gradient(rep, w, data, idx);
  return w;
}

double LinearLocalModel::loss(const Eigen::MatrixXd& rep, const Eigen::VectorXd& head,
                              const ClientDataset& data, std::span<const int> idx) const {
  check_subset(data, idx, "LinearLocalModel::loss");
  double acc = 0.0;
  for (int j : idx) {
    const double r =
        head.dot(rep.transpose() * data.inputs.row(j).transpose()) - data.responses(j);
    acc += 0.5 * r * r;
  }
  return acc / static_cast<double>(idx.size());
}

Eigen::VectorXd LinearLocalModel::head_gradient(const Eigen::MatrixXd& rep,
                                                const Eigen::VectorXd& head,
                                                const ClientDataset& data,
                                                std::span<const int> idx) const {
  check_subset(data, idx, "LinearLocalModel::head_gradient");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(rep.cols());
  for (int j : idx) {
    const Eigen::VectorXd z = rep.transpose() * data.inputs.row(j).transpose();
    g.noalias() += (head.dot(z) - data.responses(j)) * z;
  }
  return g / static_cast<double>(idx.size());
}

Eigen::MatrixXd LinearLocalModel::rep_gradient(const Eigen::MatrixXd& rep,
                                               const Eigen::VectorXd& head,
                                               const ClientDataset& data,
                                               std::span<const int> idx) const {
  check_subset(data, idx, "LinearLocalModel::rep_gradient");
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(rep.rows());
  for (int j : idx) {
    const Eigen::VectorXd x = data.inputs.row(j).transpose();
    const double residual = head.dot(rep.transpose() * x) - data.responses(j);
    weighted.noalias() += residual * x;
  }
  return (weighted / static_cast<double>(idx.size())) * head.transpose();
}

int LinearLocalModel::head_dim(const Eigen::MatrixXd& rep) const {
  return static_cast<int>(rep.cols());
}

Eigen::VectorXd LinearLocalModel::fit_head(const Eigen::MatrixXd& rep,
                                           const ClientDataset& data,
                                           std::span<const int> idx, int /*head_epochs*/,
                                           double /*eta*/) const {
  return solve_head_normal_equations(rep, data, idx).w;
}

ClientUpdate general_client_round(const Eigen::MatrixXd& b_t, const LocalModel& model,
                                  const ClientDataset& data, int mbar, int t_l,
                                  double eta_l, int head_epochs, int client_id,
                                  int round, RandomStream& stream) {
  if (t_l < 0) throw ParameterError("general_client_round: T_l must be >= 0");
  if (t_l > 0 && !(eta_l > 0.0))
    throw ParameterError("general_client_round: eta_l must be > 0 when T_l > 0");
  const std::vector<int> full = all_indices(data);
  const Eigen::VectorXd w = model.fit_head(b_t, data, full, head_epochs, eta_l);
  Eigen::MatrixXd b = b_t;
  for (int s = 0; s < t_l; ++s) {
    const std::vector<int> batch =
        sample_without_replacement(static_cast<int>(data.size()), mbar, stream);
    b -= eta_l * model.rep_gradient(b, w, data, batch);
  }
  ClientUpdate update;
  update.payload = b - b_t;
  update.pre_clip_norm = update.payload.norm();
  update.client_id = client_id;
  update.round = round;
  return update;
}

}  // namespace centaur
