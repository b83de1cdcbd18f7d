#include "centaur/synthetic_lrl.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "centaur/errors.hpp"

namespace centaur {

double response_for(const GroundTruth& truth, int client, const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = truth.b_star.data().transpose() * x;
  return truth.w_star.row(client).dot(z);
}

GroundTruth gen_ground_truth(int d, int k, int n, double kappa_target,
                             double mu_target, RandomStream& stream) {
  if (k < 1 || d < k) throw ParameterError("gen_ground_truth: need 1 <= k <= d");
  if (n < k) throw ParameterError("gen_ground_truth: need k <= n");
  if (!(kappa_target >= 1.0))
    throw ParameterError("gen_ground_truth: kappa_target must be >= 1");
  if (!(mu_target > 0.0)) throw ParameterError("gen_ground_truth: mu_target must be > 0");
  if (k == 1 && kappa_target != 1.0)
    throw ParameterError("gen_ground_truth: k = 1 forces kappa_target = 1");

  OrthonormalBasis b_star = OrthonormalBasis::haar(d, k, stream);

  Eigen::VectorXd s(k);
  for (int i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(k - 1 - i) / (k - 1);
    s(i) = std::pow(kappa_target, t);
  }
  const double s_k = s(k - 1);  // 1 by construction
  const double row_bound = mu_target * std::sqrt(static_cast<double>(k)) * s_k;

  OrthonormalBasis v = OrthonormalBasis::haar(k, k, stream);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    OrthonormalBasis u = OrthonormalBasis::haar(n, k, stream);
    Eigen::MatrixXd w = sqrt_n * u.data() * s.asDiagonal() * v.data().transpose();
    const double max_row = w.rowwise().norm().maxCoeff();
    if (max_row <= row_bound) {
      // Record the tightest incoherence constant the construction satisfies;
      // downstream threshold recipes scale with it, and the realized value is
      // what keeps their calibration comparable across seeds.
      const double mu_realized =
          (1.0 + 1e-12) * max_row / (std::sqrt(static_cast<double>(k)) * s_k);
      GroundTruth truth{std::move(b_star), std::move(w), s, s(0) / s(k - 1),
                        mu_realized};
      return truth;
    }
  }
  throw ParameterError(
      "gen_ground_truth: incoherence bound infeasible after 1000 attempts (mu_target " +
      std::to_string(mu_target) + ")");
}

ClientDataset gen_client_data(const GroundTruth& truth, int client, int m,
                              RandomStream& stream) {
  const int n = static_cast<int>(truth.w_star.rows());
  if (client < 0 || client >= n) throw ParameterError("gen_client_data: client out of range");
  if (m < 1) throw ParameterError("gen_client_data: m must be >= 1");
  const Eigen::Index d = truth.b_star.rows();
  ClientDataset data;
  data.inputs.resize(m, d);
  data.responses.resize(m);
  for (int j = 0; j < m; ++j) {
    for (Eigen::Index a = 0; a < d; ++a) data.inputs(j, a) = stream.normal();
    data.responses(j) = response_for(truth, client, data.inputs.row(j).transpose());
  }
  return data;
}

FrlProblem gen_problem(int d, int k, int n, int m, double kappa_target,
                       double mu_target, std::uint64_t seed) {
  if (m < 2) throw ParameterError("gen_problem: m must be >= 2");
  RandomStream truth_stream = derive_stream(seed, StreamDomain::data_gen, 0, 0);
  GroundTruth truth = gen_ground_truth(d, k, n, kappa_target, mu_target, truth_stream);
  FrlProblem problem{std::move(truth), {}, ProblemDims{d, k, n, m}};
  problem.clients.reserve(n);
  for (int i = 0; i < n; ++i) {
    RandomStream client_stream =
        derive_stream(seed, StreamDomain::data_gen, 1, static_cast<std::uint64_t>(i));
    problem.clients.push_back(gen_client_data(problem.truth, i, m, client_stream));
  }
  return problem;
}

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back(kBase64Chars[v & 63]);
    i += 3;
  }
  const std::size_t rem = bytes.size() - i;
  if (rem == 1) {
    const unsigned v = bytes[i] << 16;
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  throw InputError("base64: invalid character");
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw InputError("base64: length not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const int pad = text[i + 3] == '=' ? (text[i + 2] == '=' ? 2 : 1) : 0;
    unsigned v = base64_value(text[i]) << 18;
    v |= base64_value(text[i + 1]) << 12;
    if (pad < 2) v |= base64_value(text[i + 2]) << 6;
    if (pad < 1) v |= base64_value(text[i + 3]);
    out.push_back((v >> 16) & 0xFF);
    if (pad < 2) out.push_back((v >> 8) & 0xFF);
    if (pad < 1) out.push_back(v & 0xFF);
  }
  return out;
}

// Little-endian float64 payload with a shape header; column data written
// row-major so the encoding is layout-independent.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits;
      const double v = m(i, j);
      std::memcpy(&bits, &v, 8);
      for (int b = 0; b < 8; ++b) bytes.push_back((bits >> (8 * b)) & 0xFF);
    }
  }
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()},
                        {"dtype", "f64le"}, {"data", base64_encode(bytes)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.at("dtype").get<std::string>() != "f64le")
    throw InputError("matrix_from_json: unsupported dtype");
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const std::vector<unsigned char> bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(rows) * cols * 8)
    throw InputError("matrix_from_json: payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
      pos += 8;
      double v;
      std::memcpy(&v, &bits, 8);
      m(i, j2) = v;
    }
  }
  return m;
}

}  // namespace

nlohmann::json problem_to_json(const FrlProblem& problem) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& c : problem.clients) {
    clients.push_back({{"inputs", matrix_to_json(c.inputs)},
                       {"responses", matrix_to_json(c.responses)}});
  }
  return nlohmann::json{
      {"format", "lrl-problem-v1"},
      {"dims",
       {{"d", problem.dims.d}, {"k", problem.dims.k}, {"n", problem.dims.n},
        {"m", problem.dims.m}}},
      {"truth",
       {{"b_star", matrix_to_json(problem.truth.b_star.data())},
        {"w_star", matrix_to_json(problem.truth.w_star)},
        {"singular_values", matrix_to_json(problem.truth.singular_values)},
        {"kappa", problem.truth.kappa},
        {"mu", problem.truth.mu}}},
      {"clients", clients}};
}

FrlProblem problem_from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "lrl-problem-v1")
    throw InputError("problem_from_json: unknown format tag");
  const auto& dims = j.at("dims");
  const auto& truth_j = j.at("truth");
  GroundTruth truth{
      OrthonormalBasis::from_matrix(matrix_from_json(truth_j.at("b_star"))),
      matrix_from_json(truth_j.at("w_star")),
      Eigen::VectorXd(matrix_from_json(truth_j.at("singular_values"))),
      truth_j.at("kappa").get<double>(), truth_j.at("mu").get<double>()};
  FrlProblem problem{std::move(truth), {}, ProblemDims{
      dims.at("d").get<int>(), dims.at("k").get<int>(), dims.at("n").get<int>(),
      dims.at("m").get<int>()}};
  for (const auto& c : j.at("clients")) {
    ClientDataset data;
    data.inputs = matrix_from_json(c.at("inputs"));
    data.responses = Eigen::VectorXd(matrix_from_json(c.at("responses")));
    problem.clients.push_back(std::move(data));
  }
  return problem;
}

}  // namespace centaur
