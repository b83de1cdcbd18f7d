#include "centaur/random_stream.hpp"

#include <cmath>
#include <numbers>

#include "centaur/errors.hpp"

namespace centaur {

namespace detail {

std::uint64_t mix64(std::uint64_t z) {
  // splitmix64 finalizer; bijective on 64-bit words.
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t absorb(std::uint64_t h, std::uint64_t word) {
  return mix64(h ^ mix64(word ^ 0xA3EC4E7D9C61F3B5ULL));
}

}  // namespace detail

RandomStream RandomStream::from_key(std::uint64_t key) {
  RandomStream s;
  s.key_ = key;
  std::uint64_t x = key;
  bool all_zero = true;
  for (auto& word : s.state_) {
    x = detail::mix64(x);
    word = x;
    all_zero = all_zero && word == 0;
  }
  if (all_zero) s.state_[0] = 0x9E3779B97F4A7C15ULL;
  return s;
}

RandomStream RandomStream::substream(std::uint64_t tag) const {
  return from_key(detail::absorb(key_, tag));
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

std::uint64_t RandomStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("uniform_below: bound must be >= 1");
  const std::uint64_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

Eigen::MatrixXd RandomStream::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

RandomStream derive_stream(std::uint64_t master_seed, StreamDomain domain,
                           std::uint64_t round, std::uint64_t client) {
  using detail::absorb;
  std::uint64_t h = absorb(master_seed, static_cast<std::uint64_t>(domain));
  h = absorb(h, round);
  h = absorb(h, client);
  return RandomStream::from_key(h);
}

}  // namespace centaur
