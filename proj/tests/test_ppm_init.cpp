#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "centaur/errors.hpp"
#include "centaur/ppm_init.hpp"

using namespace centaur;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

PpmConfig oracle_cfg(int iterations) {
  PpmConfig cfg;
  cfg.power_iterations = iterations;
  cfg.sigma0 = 0.0;
  cfg.zeta0 = kInf;
  cfg.mbar0 = 1;
  cfg.trials = 1;
  cfg.eps_trial = 0.01;
  cfg.eps_target = 0.2;
  cfg.moment_mode = MomentMode::exact_oracle;
  return cfg;
}
}  // namespace

TEST_CASE("local second moment of zero responses is zero") {
  RandomStream s = RandomStream::from_key(400);
  ClientDataset data;
  data.inputs = s.normal_matrix(10, 4);
  data.responses = Eigen::VectorXd::Zero(10);
  std::vector<int> idx(10);
  std::iota(idx.begin(), idx.end(), 0);
  CHECK(local_second_moment(data, idx, s.normal_matrix(4, 2)).norm() == 0.0);
}

TEST_CASE("hand-evaluated single-point second moment") {
  ClientDataset data;
  data.inputs = Eigen::MatrixXd::Zero(1, 3);
  data.inputs(0, 0) = 1.0;  // x = e1
  data.responses = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::MatrixXd x_mat = Eigen::MatrixXd::Zero(3, 1);
  x_mat(0, 0) = 1.0;  // X = e1
  const std::vector<int> idx{0};
  const Eigen::MatrixXd y = local_second_moment(data, idx, x_mat);
  CHECK(y(0, 0) == doctest::Approx(4.0));
  CHECK(y(1, 0) == 0.0);
  CHECK(y(2, 0) == 0.0);
}

TEST_CASE("two-pass second moment equals the materialized product") {
  RandomStream s = RandomStream::from_key(401);
  const GroundTruth truth = gen_ground_truth(6, 2, 5, 1.5, 3.0, s);
  const ClientDataset data = gen_client_data(truth, 1, 15, s);
  const Eigen::MatrixXd x_mat = s.normal_matrix(6, 2);
  std::vector<int> idx{0, 3, 4, 9, 14};
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(6, 6);
  for (int j : idx) {
    const Eigen::VectorXd x = data.inputs.row(j).transpose();
    dense += data.responses(j) * data.responses(j) * x * x.transpose();
  }
  dense /= static_cast<double>(idx.size());
  CHECK((local_second_moment(data, idx, x_mat) - dense * x_mat).norm() <= 1e-10);
}

TEST_CASE("population moment target has the truth as its top eigenspace") {
  RandomStream s = RandomStream::from_key(402);
  for (int d : {10, 40, 100}) {
    const GroundTruth truth = gen_ground_truth(d, 3, 30, 2.0, 4.0, s);
    const Eigen::MatrixXd a = exact_moment_target(truth);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    // Eigenvalues ascend: the top k eigenvectors are the last three columns.
    const Eigen::MatrixXd top = eig.eigenvectors().rightCols(3);
    const OrthonormalBasis top_basis = OrthonormalBasis::from_matrix(top);
    CHECK(principal_angle_dist(top_basis, truth.b_star) <= 1e-10);
    // Spectrum: 2 s_i^2 + trace(Gamma) on top of a trace(Gamma) bulk.
    const double bulk = truth.singular_values.squaredNorm();
    CHECK(eig.eigenvalues()(d - 1) ==
          doctest::Approx(2.0 * truth.singular_values(0) * truth.singular_values(0) +
                          bulk));
    CHECK(eig.eigenvalues()(0) == doctest::Approx(bulk));
  }
}

TEST_CASE("exact-moment power iterations converge at the eigengap rate") {
  RandomStream s = RandomStream::from_key(403);
  // d=2, k=1, s1=1: target diag-similar with eigenvalues {3, 1}.
  const FrlProblem problem = gen_problem(2, 1, 4, 4, 1.0, 1.5, 17);
  for (int rep = 0; rep < 20; ++rep) {
    RandomStream trial = s.substream(rep);
    const OrthonormalBasis x = ppm_trial(problem, oracle_cfg(40), trial);
    CHECK(principal_angle_dist(x, problem.truth.b_star) <= 1e-8);
    CHECK(x.orthonormality_defect() <= 1e-10);
  }
}

TEST_CASE("sampled-moment trials reach the initialization radius when samples suffice") {
  // d = 6 keeps the moment-estimation floor well inside dist0 = 0.2 at
  // n mbar0 = 1e4 samples per iteration.
  const FrlProblem problem = gen_problem(6, 3, 200, 100, 1.0, 2.5, 7003);
  PpmConfig cfg;
  cfg.power_iterations = 40;
  cfg.sigma0 = 0.0;
  cfg.zeta0 = kInf;
  cfg.mbar0 = 50;
  cfg.trials = 1;
  cfg.moment_mode = MomentMode::sampled;
  for (int seed = 0; seed < 10; ++seed) {
    RandomStream trial = RandomStream::from_key(1000 + seed);
    const OrthonormalBasis x = ppm_trial(problem, cfg, trial);
    CHECK(principal_angle_dist(x, problem.truth.b_star) <= 0.2);
  }
}

TEST_CASE("sampled-moment floor shrinks like one over sqrt of the sample count") {
  PpmConfig cfg;
  cfg.power_iterations = 40;
  cfg.sigma0 = 0.0;
  cfg.zeta0 = kInf;
  cfg.trials = 1;
  cfg.moment_mode = MomentMode::sampled;
  double dist_small, dist_large;
  {
    const FrlProblem problem = gen_problem(50, 3, 200, 100, 2.0, 4.0, 7001);
    cfg.mbar0 = 50;
    RandomStream trial = RandomStream::from_key(901);
    dist_small = principal_angle_dist(ppm_trial(problem, cfg, trial),
                                      problem.truth.b_star);
  }
  {
    const FrlProblem problem = gen_problem(50, 3, 200, 1600, 2.0, 4.0, 7001);
    cfg.mbar0 = 800;  // 16x the per-iteration samples: expect ~4x lower floor
    RandomStream trial = RandomStream::from_key(901);
    dist_large = principal_angle_dist(ppm_trial(problem, cfg, trial),
                                      problem.truth.b_star);
  }
  CHECK(dist_large <= dist_small / 2.0);
}

TEST_CASE("cross-validated initialization lands inside the target radius") {
  const FrlProblem problem = gen_problem(6, 3, 200, 100, 1.0, 2.5, 7004);
  PpmConfig cfg;
  cfg.power_iterations = 40;
  cfg.sigma0 = 0.0;
  cfg.zeta0 = kInf;
  cfg.mbar0 = 50;
  cfg.trials = 3;
  // Accuracy pairing sized to the sampled-moment floor at this scale; the
  // pairing condition requires eps_target > 0.67 for eps_trial = 0.18.
  cfg.eps_trial = 0.18;
  cfg.eps_target = 0.7;
  cfg.moment_mode = MomentMode::sampled;
  for (int rep = 0; rep < 10; ++rep) {
    RandomStream s = RandomStream::from_key(600 + rep);
    const OrthonormalBasis b0 = initialize(problem, cfg, s, nullptr);
    CHECK(principal_angle_dist(b0, problem.truth.b_star) <= 0.2);
  }
}

TEST_CASE("selection accepts a self-agreeing pool") {
  RandomStream s = RandomStream::from_key(404);
  const OrthonormalBasis b = OrthonormalBasis::haar(10, 2, s);
  const std::vector<OrthonormalBasis> pool{b, b, b};
  CHECK(cross_validate_select(pool, 0.01) == 0);
}

TEST_CASE("selection finds the good majority against random impostors") {
  RandomStream s = RandomStream::from_key(405);
  const GroundTruth truth = gen_ground_truth(200, 3, 10, 1.0, 2.0, s);
  int good_selected = 0;
  const int trials = 50;
  for (int rep = 0; rep < trials; ++rep) {
    std::vector<OrthonormalBasis> pool;
    for (int c = 0; c < 7; ++c)
      pool.push_back(spectral_oracle_init(truth, 0.01, s));
    for (int c = 0; c < 3; ++c) pool.push_back(OrthonormalBasis::haar(200, 3, s));
    const int selected = cross_validate_select(pool, 0.01);
    if (selected < 7 &&
        principal_angle_dist(pool[selected], truth.b_star) <= 0.2)
      ++good_selected;
  }
  CHECK(good_selected == trials);
}

TEST_CASE("selection errors on pairwise-orthogonal pools") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(9, 9);
  std::vector<OrthonormalBasis> pool;
  for (int c = 0; c < 3; ++c)
    pool.push_back(OrthonormalBasis::from_matrix(eye.middleCols(3 * c, 3)));
  CHECK_THROWS_AS(cross_validate_select(pool, 0.01), SelectionError);
}

TEST_CASE("initialization with one trial degenerates to that trial") {
  const FrlProblem problem = gen_problem(2, 1, 4, 4, 1.0, 1.5, 18);
  PpmConfig cfg = oracle_cfg(30);
  RandomStream a = RandomStream::from_key(500);
  const OrthonormalBasis via_init = initialize(problem, cfg, a, nullptr);
  RandomStream b = RandomStream::from_key(500);
  RandomStream trial = b.substream(0);
  const OrthonormalBasis via_trial = ppm_trial(problem, cfg, trial);
  CHECK(via_init.data() == via_trial.data());
}

TEST_CASE("initialization charges exactly the init curve") {
  const FrlProblem problem = gen_problem(8, 2, 10, 12, 1.5, 3.0, 19);
  // Exact-moment trials with a whisper of noise: private (so the ledger is
  // charged) yet convergent enough for the selection step to pass.
  PpmConfig cfg;
  cfg.power_iterations = 25;
  cfg.sigma0 = 1e-3;
  cfg.zeta0 = 50.0;
  cfg.mbar0 = 6;
  cfg.trials = 3;
  cfg.moment_mode = MomentMode::exact_oracle;
  PrivacyLedger ledger = PrivacyLedger::create(1e-5, Adjacency::replace_one_user);
  RandomStream s = RandomStream::from_key(501);
  initialize(problem, cfg, s, &ledger);
  const RdpCurve expected = init_rdp_curve(3, 25, 1e-3, Adjacency::replace_one_user,
                                           ledger.init_curve.alpha_grid);
  CHECK(ledger.init_curve.epsilon_at == expected.epsilon_at);
  CHECK(ledger.main_rounds == 0);
}

TEST_CASE("initialization refuses to account a noiseless run") {
  const FrlProblem problem = gen_problem(8, 2, 10, 12, 1.5, 3.0, 20);
  PpmConfig cfg = oracle_cfg(4);
  PrivacyLedger ledger = PrivacyLedger::create(1e-5, Adjacency::replace_one_user);
  RandomStream s = RandomStream::from_key(502);
  CHECK_THROWS_AS(initialize(problem, cfg, s, &ledger), ParameterError);
}

TEST_CASE("cross-validation boosting beats the single-trial failure rate") {
  // Synthetic harness: each candidate is good with probability 0.9.
  RandomStream s = RandomStream::from_key(503);
  const GroundTruth truth = gen_ground_truth(60, 2, 8, 1.0, 2.0, s);
  const int runs = 1000;
  int selected_failures = 0;
  int generated_bad = 0, generated_total = 0;
  for (int run = 0; run < runs; ++run) {
    std::vector<OrthonormalBasis> pool;
    for (int c = 0; c < 5; ++c) {
      ++generated_total;
      if (s.uniform() < 0.9) {
        pool.push_back(spectral_oracle_init(truth, 0.01, s));
      } else {
        ++generated_bad;
        pool.push_back(OrthonormalBasis::haar(60, 2, s));
      }
    }
    bool failed;
    try {
      const int selected = cross_validate_select(pool, 0.01);
      failed = principal_angle_dist(pool[selected], truth.b_star) > 0.2;
    } catch (const SelectionError&) {
      failed = true;
    }
    if (failed) ++selected_failures;
  }
  const double selected_rate = selected_failures / static_cast<double>(runs);
  const double single_rate = generated_bad / static_cast<double>(generated_total);
  CHECK(selected_rate < single_rate);
}

TEST_CASE("spectral oracle hits the requested distance exactly") {
  RandomStream s = RandomStream::from_key(504);
  const GroundTruth truth = gen_ground_truth(30, 3, 10, 1.5, 3.0, s);
  const OrthonormalBasis at_zero = spectral_oracle_init(truth, 0.0, s);
  CHECK(principal_angle_dist(at_zero, truth.b_star) <= 1e-10);
  const OrthonormalBasis at_02 = spectral_oracle_init(truth, 0.2, s);
  CHECK(std::abs(principal_angle_dist(at_02, truth.b_star) - 0.2) <= 1e-10);
  CHECK(at_02.orthonormality_defect() <= 1e-10);
  CHECK_THROWS_AS(spectral_oracle_init(truth, 1.0, s), ParameterError);
}

TEST_CASE("config validation rejects an unsound accuracy pairing") {
  PpmConfig cfg = oracle_cfg(5);
  cfg.eps_trial = 0.3;
  cfg.eps_target = 0.2;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  PpmConfig bad_trials = oracle_cfg(5);
  bad_trials.trials = 0;
  CHECK_THROWS_AS(bad_trials.validate(), ParameterError);
}
