#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "centaur/random_stream.hpp"

using namespace centaur;

namespace {
std::array<std::uint64_t, 4> first_four(RandomStream s) {
  return {s.next_u64(), s.next_u64(), s.next_u64(), s.next_u64()};
}
}  // namespace

TEST_CASE("identical keys give identical streams") {
  RandomStream a = derive_stream(17, StreamDomain::client_round, 3, 9);
  RandomStream b = derive_stream(17, StreamDomain::client_round, 3, 9);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("adjacent client indices give distinct streams") {
  const auto a = first_four(derive_stream(1, StreamDomain::client_round, 0, 1));
  const auto b = first_four(derive_stream(1, StreamDomain::client_round, 0, 2));
  CHECK(a != b);
}

TEST_CASE("domain separation at equal indices") {
  const auto a = first_four(derive_stream(5, StreamDomain::data_gen, 2, 7));
  const auto b = first_four(derive_stream(5, StreamDomain::mechanism_noise, 2, 7));
  CHECK(a != b);
}

TEST_CASE("no first-four collisions across many derived keys") {
  std::set<std::array<std::uint64_t, 4>> seen;
  int count = 0;
  for (std::uint64_t round = 0; round < 250; ++round) {
    for (std::uint64_t client = 0; client < 200; ++client) {
      seen.insert(first_four(derive_stream(42, StreamDomain::client_round, round, client)));
      ++count;
    }
  }
  for (std::uint64_t round = 0; round < 250; ++round) {
    for (std::uint64_t client = 0; client < 200; ++client) {
      seen.insert(first_four(derive_stream(42, StreamDomain::sampling, round, client)));
      ++count;
    }
  }
  CHECK(count == 100000);
  CHECK(seen.size() == 100000);
}

TEST_CASE("substream is independent of parent consumption") {
  RandomStream parent = RandomStream::from_key(99);
  RandomStream child_before = parent.substream(4);
  parent.next_u64();
  parent.next_u64();
  RandomStream child_after = parent.substream(4);
  CHECK(first_four(child_before) == first_four(child_after));
}

TEST_CASE("uniform lies in [0, 1) and normal has sane moments") {
  RandomStream s = RandomStream::from_key(7);
  double sum = 0.0, sum_sq = 0.0;
  constexpr int kSamples = 200000;
  for (int i = 0; i < kSamples; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = s.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / kSamples;
  const double var = sum_sq / kSamples - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_below stays in range and covers all residues") {
  RandomStream s = RandomStream::from_key(13);
  std::array<int, 7> counts{};
  for (int i = 0; i < 7000; ++i) counts[s.uniform_below(7)]++;
  for (int c : counts) CHECK(c > 800);  // 1000 expected each
}

TEST_CASE("normal_matrix fills row-major from the stream") {
  RandomStream a = RandomStream::from_key(3);
  RandomStream b = RandomStream::from_key(3);
  const Eigen::MatrixXd m = a.normal_matrix(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(m(i, j) == b.normal());
}
