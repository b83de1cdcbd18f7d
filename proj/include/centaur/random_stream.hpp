#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace centaur {

/// Domains for stream derivation. Each (seed, domain, round, client) tuple names
/// an independent stream, so results do not depend on execution schedule.
enum class StreamDomain : std::uint64_t {
  data_gen = 1,
  init_trial = 2,
  client_round = 3,
  mechanism_noise = 4,
  sampling = 5,
};

/// Deterministic splittable random stream (xoshiro256++ seeded from a hashed key).
///
/// Identical keys yield identical output sequences; distinct keys yield streams
/// that differ from the first outputs on. A single stream must not be shared
/// across concurrent callers; derive substreams instead.
class RandomStream {
 public:
  static RandomStream from_key(std::uint64_t key);

  /// Independent child stream; depends only on this stream's key and the tag,
  /// not on how much of the parent has been consumed.
  RandomStream substream(std::uint64_t tag) const;

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller (no cached second value, so the draw count
  /// per sample is fixed and reproducible).
  double normal();

  /// Uniform integer in [0, bound), bound >= 1, rejection-sampled (unbiased).
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Matrix with i.i.d. standard normal entries, filled in row-major order.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

namespace detail {
std::uint64_t mix64(std::uint64_t z);
std::uint64_t absorb(std::uint64_t h, std::uint64_t word);
}  // namespace detail

/// Stream keyed by (master_seed, domain, round, client).
RandomStream derive_stream(std::uint64_t master_seed, StreamDomain domain,
                           std::uint64_t round, std::uint64_t client);

}  // namespace centaur
