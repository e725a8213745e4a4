#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "hofilt/error.hpp"
#include "hofilt/model.hpp"
#include "hofilt/partition.hpp"

using namespace hofilt;

namespace {

PosysModel model_with_bound(double lh) {
  PosysModel::Spec spec;
  spec.drift = {parse("-x1", 1)};
  spec.diffusion = {parse("1", 1)};
  spec.sensor = {parse("sin(x1)", 1)};
  spec.lh_bound = lh;
  return PosysModel(spec);
}

}  // namespace

TEST(Uniform, Times) {
  const Partition p = Partition::uniform(4, 1.0);
  EXPECT_EQ(p.times(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(p.intervals(), 4u);
  EXPECT_EQ(Partition::uniform(1, 2.5).times(), (std::vector<double>{0.0, 2.5}));
}

TEST(Uniform, MeshIsHorizonOverN) {
  for (std::size_t n : {3u, 7u, 10u, 64u, 1000u}) {
    const Partition p = Partition::uniform(n, 1.3);
    const double expect = 1.3 / static_cast<double>(n);
    EXPECT_LE(std::abs(p.mesh() - expect), 4 * std::numeric_limits<double>::epsilon() * 1.3) << n;
  }
}

TEST(Uniform, RefiningHalvesMesh) {
  for (std::size_t n : {1u, 2u, 4u, 16u, 128u}) {
    EXPECT_EQ(Partition::uniform(2 * n, 1.0).mesh(), Partition::uniform(n, 1.0).mesh() / 2.0);
  }
}

TEST(Construction, Rejects) {
  EXPECT_THROW(Partition({0.0}), DomainError);
  EXPECT_THROW(Partition({0.1, 1.0}), DomainError);
  EXPECT_THROW(Partition({0.0, 0.5, 0.5, 1.0}), DomainError);
  EXPECT_THROW(Partition({0.0, 0.01, 1.0}), DomainError);  // ratio 99 > 10
  EXPECT_NO_THROW(Partition({0.0, 0.01, 1.0}, 100.0));
  EXPECT_THROW(Partition::uniform(0, 1.0), DomainError);
  EXPECT_THROW(Partition({0.0, 1.0}, 0.5), DomainError);
}

TEST(Construction, CountBoundedByUniformity) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t{0.0};
    const std::size_t n = 1 + gen() % 40;
    for (std::size_t i = 0; i < n; ++i) t.push_back(t.back() + u(gen));
    const Partition p(t, 5.0);
    EXPECT_LE(static_cast<double>(p.intervals()), p.uniformity() * p.horizon() / p.mesh() + 1e-9);
  }
}

TEST(Locate, Examples) {
  const Partition p = Partition::uniform(4, 1.0);
  auto l = p.locate(0.3);
  EXPECT_EQ(l.interval, 1u);
  EXPECT_EQ(l.left, 0.25);
  EXPECT_EQ(l.right, 0.5);
  l = p.locate(0.0);
  EXPECT_EQ(l.interval, 0u);
  EXPECT_EQ(l.right, 0.25);
  EXPECT_EQ(p.locate(0.25).interval, 1u);
  EXPECT_EQ(p.locate(1.0).interval, 3u);
  EXPECT_THROW(p.locate(-1e-12), OutOfRange);
  EXPECT_THROW(p.locate(1.0 + 1e-12), OutOfRange);
}

TEST(Locate, MembershipProperty) {
  const Partition p({0.0, 0.1, 0.35, 0.4, 0.8, 1.0});
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double s = u(gen);
    const auto l = p.locate(s);
    EXPECT_LE(p.times()[l.interval], s);
    EXPECT_LT(s, p.times()[l.interval + 1]);
  }
}

TEST(Admissible, Examples) {
  const PosysModel m = model_with_bound(1.0);  // delta0 = 0.5
  EXPECT_TRUE(admissible(Partition::uniform(1, 10.0), m, 1).ok);
  const Partition p04({0.0, 0.4, 0.8});
  EXPECT_TRUE(admissible(p04, m, 2).ok);
  const Partition p05({0.0, 0.5, 1.0});
  const Admissibility a = admissible(p05, m, 2);
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(a.mesh, 0.5);
  EXPECT_EQ(a.delta0, 0.5);
  EXPECT_FALSE(a.reason.empty());
  EXPECT_GE(a.headroom, 0.0);
}

TEST(Admissible, ConstantSensorHasNoBound) {
  PosysModel::Spec spec;
  spec.drift = {parse("-x1", 1)};
  spec.diffusion = {parse("1", 1)};
  spec.sensor = {parse("3", 1)};
  spec.lh_bound = 0.0;
  EXPECT_TRUE(admissible(Partition::uniform(1, 100.0), PosysModel(spec), 3).ok);
}
