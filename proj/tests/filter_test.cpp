#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hofilt/error.hpp"
#include "hofilt/filter.hpp"
#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

using namespace hofilt;

namespace {

PosysModel benchmark() { return load_model(HOFILT_SOURCE_DIR "/models/benchmark_tanh.json"); }

PathBundle observe(const PosysModel& m, std::size_t n, std::size_t r, std::uint64_t seed) {
  return generate(m, std::make_shared<const FineGrid>(Partition::uniform(n, m.horizon()), r), seed, 0,
                  Measure::P);
}

EnsembleOptions opts(std::size_t paths, std::uint64_t seed, unsigned threads = 1) {
  EnsembleOptions o;
  o.paths = paths;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

TEST(Scheme, Labels) {
  EXPECT_EQ(Scheme::reference().label(), "ref");
  EXPECT_EQ(Scheme::order(3).label(), "3");
  EXPECT_TRUE(Scheme::reference().is_reference());
  EXPECT_THROW(Scheme::order(0), DomainError);
  EXPECT_THROW(Scheme::order(kMaxOrder + 1), DomainError);
}

TEST(Estimate, NormalizedConstantIsOne) {
  const PosysModel m = benchmark();
  const PathBundle obs = observe(m, 8, 16, 1);
  for (const Scheme& s : {Scheme::reference(), Scheme::order(1), Scheme::order(2), Scheme::order(3)}) {
    const FilterEstimate e = estimate(m, Expr::constant(1.0), obs, s, opts(500, 2));
    EXPECT_EQ(e.pi_phi, 1.0) << s.label();
    EXPECT_EQ(e.rho_phi, e.rho_one);
    EXPECT_GT(e.rho_one, 0.0);
    EXPECT_EQ(e.paths, 500u);
    EXPECT_EQ(e.intervals, 8u);
    EXPECT_EQ(e.mesh, 0.125);
  }
}

TEST(Estimate, BlindSensorGivesPrior) {
  PosysModel::Spec spec;
  spec.drift = {parse("-x1", 1)};
  spec.diffusion = {parse("0.5", 1)};
  spec.sensor = {parse("0", 1)};
  spec.lh_bound = 0.0;
  spec.initial = InitialLaw::point({1.0});
  const PosysModel m(spec);
  const PathBundle obs = observe(m, 4, 64, 3);
  const FilterEstimate e = estimate(m, parse("x1", 1), obs, Scheme::order(2), opts(20000, 4));
  EXPECT_EQ(e.rho_one, 1.0);
  EXPECT_EQ(e.se_rho_one, 0.0);
  // Euler mean on 256 steps is (1 - 1/256)^256; its gap to exp(-1) is far below the MC error.
  const double mean = std::pow(1.0 - 1.0 / 256.0, 256.0);
  EXPECT_LT(std::abs(e.pi_phi - mean), 5.0 * e.se_pi);
  // Unit weights: the ratio error reduces to the plain standard error up to the n / (n - 1) factor.
  EXPECT_NEAR(e.se_pi, e.se_rho_phi, 1e-4 * e.se_rho_phi);
}

TEST(Estimate, BitIdenticalAcrossThreadCounts) {
  const PosysModel m = benchmark();
  const PathBundle obs = observe(m, 8, 16, 5);
  const Expr phi = parse("tanh(x1)", 1);
  for (const Scheme& s : {Scheme::reference(), Scheme::order(3)}) {
    const FilterEstimate a = estimate(m, phi, obs, s, opts(777, 6, 1));
    const FilterEstimate b = estimate(m, phi, obs, s, opts(777, 6, 3));
    EXPECT_EQ(a.pi_phi, b.pi_phi);
    EXPECT_EQ(a.rho_phi, b.rho_phi);
    EXPECT_EQ(a.se_pi, b.se_pi);
  }
}

TEST(Estimate, StandardErrorScalesWithEnsembleSize) {
  const PosysModel m = benchmark();
  const PathBundle obs = observe(m, 4, 16, 7);
  const Expr phi = parse("x1", 1);
  const FilterEstimate small = estimate(m, phi, obs, Scheme::order(2), opts(4000, 8));
  const FilterEstimate large = estimate(m, phi, obs, Scheme::order(2), opts(8000, 9));
  const double ratio = large.se_pi / small.se_pi;
  EXPECT_GT(ratio, 0.6);
  EXPECT_LT(ratio, 0.82);
}

TEST(Estimate, HigherOrderTracksReferenceBetter) {
  const PosysModel m = benchmark();
  const Expr phi = parse("tanh(x1)", 1);
  std::vector<double> e1, e2;
  for (std::uint64_t y = 0; y < 9; ++y) {
    const PathBundle obs = observe(m, 8, 32, 100 + y);
    const double d1 = paired_error(m, phi, obs, 1, opts(2000, y)).value;
    const double d2 = paired_error(m, phi, obs, 2, opts(2000, y)).value;
    e1.push_back(std::abs(d1));
    e2.push_back(std::abs(d2));
  }
  std::nth_element(e1.begin(), e1.begin() + 4, e1.end());
  std::nth_element(e2.begin(), e2.begin() + 4, e2.end());
  EXPECT_LT(e2[4], e1[4]);
}

TEST(Estimate, PairedErrorMatchesDifferenceOfEstimates) {
  const PosysModel m = benchmark();
  const PathBundle obs = observe(m, 4, 16, 11);
  const Expr phi = parse("tanh(x1)", 1);
  const auto o = opts(1000, 12);
  const double ref = estimate(m, phi, obs, Scheme::reference(), o).rho_phi;
  const double m2 = estimate(m, phi, obs, Scheme::order(2), o).rho_phi;
  const PairedError p = paired_error(m, phi, obs, 2, o);
  EXPECT_NEAR(p.value, ref - m2, 1e-12);
  EXPECT_GT(p.se, 0.0);
}

TEST(Estimate, Errors) {
  const PosysModel m = benchmark();
  const PathBundle obs = observe(m, 4, 8, 1);
  EXPECT_THROW(estimate(m, parse("x1", 1), obs, Scheme::order(2), opts(0, 1)), DomainError);
  EXPECT_THROW(estimate(m, parse("x2", 2), obs, Scheme::order(2), opts(10, 1)), UnknownVariable);
  PosysModel::Spec spec;
  spec.drift = {parse("-0.5*x1", 1)};
  spec.diffusion = {parse("0.3", 1)};
  spec.sensor = {parse("tanh(x1)", 1)};
  spec.lh_bound = 0.3;
  spec.horizon = 2.0;
  const PosysModel wide(spec);
  const PathBundle one = observe(wide, 1, 8, 1);
  EXPECT_THROW(estimate(wide, parse("x1", 1), one, Scheme::order(2), opts(10, 1)), InadmissibleMesh);
  EXPECT_NO_THROW(estimate(wide, parse("x1", 1), one, Scheme::order(1), opts(10, 1)));
  auto o = opts(10, 1);
  o.override_mesh = true;
  EXPECT_NO_THROW(estimate(wide, parse("x1", 1), one, Scheme::order(2), o));
}
