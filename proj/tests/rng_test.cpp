#include <gtest/gtest.h>

#include <cmath>

#include "hofilt/rng.hpp"

using namespace hofilt;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, Reproducible) {
  NormalStream a(42, 7, 0x200), b(42, 7, 0x200);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(NormalStream, RandomAccessMatchesSequential) {
  NormalStream s(3, 1, 0x300);
  std::vector<double> seq;
  for (int i = 0; i < 101; ++i) seq.push_back(s.next());
  const NormalStream r(3, 1, 0x300);
  for (int i = 100; i >= 0; --i) EXPECT_EQ(r.at(static_cast<std::uint64_t>(i)), seq[static_cast<std::size_t>(i)]);
}

TEST(NormalStream, StreamsDiffer) {
  NormalStream a(1, 0, 0x200), b(1, 1, 0x200), c(1, 0, 0x201), d(2, 0, 0x200);
  const double x = a.next();
  EXPECT_NE(x, b.next());
  EXPECT_NE(x, c.next());
  EXPECT_NE(x, d.next());
}

TEST(NormalStream, Moments) {
  NormalStream s(99, 0, 0x400);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_LT(std::abs(m1), 5.0 / std::sqrt(n));
  EXPECT_LT(std::abs(m2 - 1.0), 5.0 * std::sqrt(2.0 / n));
  EXPECT_LT(std::abs(m4 - 3.0), 5.0 * std::sqrt(96.0 / n));
}

TEST(NormalStream, LagOneCorrelation) {
  NormalStream s(5, 3, 0x200);
  const int n = 100000;
  double prev = s.next(), acc = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next();
    acc += z * prev;
    prev = z;
  }
  EXPECT_LT(std::abs(acc / n), 5.0 / std::sqrt(n));
}

TEST(MixSeed, Distinct) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(0, 1));
  EXPECT_EQ(mix_seed(17, 4), mix_seed(17, 4));
}
