#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellsim/rng.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace bellsim;

// Known-answer vectors published with the Random123 library.
TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(B{0, 0, 0, 0}, K{0, 0}) ==
        B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                             K{0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             K{0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("substreams are reproducible and distinct") {
  static_assert(std::uniform_random_bit_generator<CounterRng>);
  CounterRng a(42, StreamTag::Trial, 7), b(42, StreamTag::Trial, 7);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 0; k < 1000; ++k) firsts.insert(CounterRng(42, StreamTag::Trial, k)());
  firsts.insert(CounterRng(42, StreamTag::DetectorKeep, 0)());
  firsts.insert(CounterRng(43, StreamTag::Trial, 0)());
  firsts.insert(CounterRng(42, StreamTag::Trial, std::uint64_t{1} << 32)());
  CHECK(firsts.size() == 1003);
}

TEST_CASE("uniform draws stay in range with the right moments") {
  CounterRng rng(1, StreamTag::Trial, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    double v = rng.uniform_positive();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    sum += u;
    sum2 += u * u;
  }
  double mean = sum / n;
  // Var(U) = 1/12; 5 sigma on the mean.
  CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal and exponential moments") {
  CounterRng rng(2, StreamTag::Trial, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, e = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    s += z;
    s2 += z * z;
    e += rng.exponential(4.0);
  }
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
  // Var(Z^2) = 2.
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  // Exp(4): mean 1/4, sd 1/4.
  CHECK(std::abs(e / n - 0.25) < 5.0 * 0.25 / std::sqrt(n));
}

TEST_CASE("discrete sampling follows its weights and skips zeros") {
  CounterRng rng(3, StreamTag::Trial, 0);
  std::vector<double> w{0.2, 0.0, 0.5, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.discrete(w)];
  CHECK(counts[1] == 0);
  for (int k : {0, 2, 3}) {
    double p = w[k];
    CHECK(std::abs(counts[k] - n * p) < 5.0 * std::sqrt(n * p * (1 - p)));
  }
  std::vector<double> point{0.0, 1.0};
  for (int i = 0; i < 100; ++i) CHECK(rng.discrete(point) == 1);
}
