#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hofilt/error.hpp"
#include "hofilt/likelihood.hpp"
#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

using namespace hofilt;

namespace {

PosysModel benchmark() { return load_model(HOFILT_SOURCE_DIR "/models/benchmark_tanh.json"); }

PosysModel two_noise_model() {
  PosysModel::Spec spec;
  spec.state_dim = 2;
  spec.noise_dim = 2;
  spec.obs_dim = 2;
  spec.drift = {parse("-0.5*x1 + 0.2*sin(x2)", 2), parse("-x2", 2)};
  spec.diffusion = {parse("0.3", 2), parse("0.1*cos(x2)", 2), parse("0", 2), parse("0.2", 2)};
  spec.sensor = {parse("tanh(x1)", 2), parse("0.5*sin(x1 + x2)", 2)};
  spec.lh_bound = 0.4;
  spec.initial = InitialLaw::point({0.2, -0.1});
  return PosysModel(spec);
}

PathBundle bundle(const PosysModel& m, std::size_t n, std::size_t r, std::uint64_t seed,
                  Measure measure = Measure::P) {
  return generate(m, std::make_shared<const FineGrid>(Partition::uniform(n, m.horizon()), r), seed, 0,
                  measure);
}

}  // namespace

TEST(Truncate, Examples) {
  EXPECT_EQ(truncate(2.5, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(truncate(2.5, 1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(truncate(2.5, 1.0, -1.0), -0.5);
  EXPECT_NEAR(truncate(2.5, 0.1, 1e-6), 1e-6, 1e-30);
  EXPECT_LT(std::abs(truncate(2.5, 0.1, 1e6)), 1e-20);
  EXPECT_THROW(truncate(2.5, 0.0, 1.0), DomainError);
  EXPECT_THROW(truncation_error(2.5, -1.0, 1.0), DomainError);
}

TEST(Truncate, OddBoundedAndErrorConsistent) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> uq(1.0, 4.0), ud(1e-6, 1.0), uz(-1e3, 1e3);
  for (int i = 0; i < 100000; ++i) {
    const double q = uq(gen), d = ud(gen), z = uz(gen);
    const double g = truncate(q, d, z);
    EXPECT_LE(std::abs(g), d);
    EXPECT_EQ(truncate(q, d, -z), -g);
    const double e = truncation_error(q, d, z);
    EXPECT_LE(std::abs(e), std::pow(std::abs(z), 2 * q + 1) / std::pow(d, 2 * q) * (1 + 1e-12));
    EXPECT_NEAR(g - z, e, 4 * std::numeric_limits<double>::epsilon() * std::abs(z));
  }
}

TEST(Truncate, ErrorAccurateForSmallArguments) {
  // u = z^5 for delta = 1, q = 2.5 at z = 1e-4, so the error is about -1e-24.
  const double z = 1e-4;
  EXPECT_NEAR(truncation_error(2.5, 1.0, z), -std::pow(z, 6) / (1 + std::pow(z, 5)), 1e-36);
}

TEST(Scheme, FirstOrderIsLeftPointSum) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 1);
  const PathBundle b = bundle(m, 8, 32, 3);
  const LikelihoodResult r = xi_bar(m, t, b, 1);
  const FineGrid& g = b.grid();
  double expect = 0.0;
  for (std::size_t j = 0; j < 8; ++j) {
    const auto x = b.state(g.coarse_index(j));
    const std::size_t l0 = g.coarse_index(j), l1 = g.coarse_index(j + 1);
    const double h = std::tanh(x[0]);
    double part = h * (b.y(l1, 1) - b.y(l0, 1)) - 0.5 * h * h * g.coarse().step(j);
    EXPECT_NEAR(r.xi_bar_j[j], part, 1e-13);
    expect += part;
  }
  EXPECT_NEAR(r.xi_bar, expect, 1e-12);
  EXPECT_EQ(r.xi_untamed, r.xi_bar);
  EXPECT_TRUE(r.raw_mu.empty());
}

TEST(Scheme, ThreeRoutesAgree) {
  const PosysModel m = two_noise_model();
  const CoefficientTable t = build_table(m, 4);
  const PathBundle b = bundle(m, 4, 16, 7);
  const int orders[] = {1, 2, 3, 4};
  const auto rs = xi_bar_orders(m, t, b, orders);
  for (const auto& r : rs) {
    for (std::size_t j = 0; j < 4; ++j) {
      const IntervalTerms it = xi_tau_m_interval(m, t, b, j, r.order);
      ASSERT_EQ(it.terms.size(), r.terms[j].size());
      for (std::size_t k = 0; k < it.terms.size(); ++k) EXPECT_NEAR(it.terms[k], r.terms[j][k], 1e-13);
      EXPECT_NEAR(it.value, r.untamed_j[j], 1e-12);
      // Independent route through the per-index iterated integrals.
      const auto x = b.state(b.grid().coarse_index(j));
      for (int i = 0; i <= m.obs_dim(); ++i) {
        for (std::size_t a = 0; a < it.index_count; ++a) {
          const auto I = iterated_integral(t.indices()[a], b, j);
          const double direct = t.entry(i, a).eval(x) * integrate_against_dy(I, i, b, j);
          EXPECT_NEAR(direct, it.term(i, a), 1e-13 * (1 + std::abs(direct)));
        }
      }
    }
  }
}

TEST(Scheme, OrdersShareOnePass) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 3);
  const PathBundle b = bundle(m, 8, 16, 5);
  const int orders[] = {3, 1, 2};
  const auto rs = xi_bar_orders(m, t, b, orders);
  for (std::size_t o = 0; o < 3; ++o) {
    const auto single = xi_bar(m, t, b, orders[o]);
    EXPECT_EQ(rs[o].order, orders[o]);
    EXPECT_EQ(rs[o].xi_bar, single.xi_bar);
    EXPECT_EQ(rs[o].xi_bar_j, single.xi_bar_j);
  }
}

TEST(Scheme, DecompositionIdentity) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PathBundle b = bundle(m, 4, 32, seed);
    const auto r2 = xi_bar(m, t, b, 2);
    for (int order : {3, 4}) {
      const auto r = xi_bar(m, t, b, order);
      double sum = 0.0, eps = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        eps += truncation_error(order - 0.5, b.grid().coarse().step(j), r.raw_mu[j]);
        EXPECT_EQ(r.second_order_part[j], r2.xi_bar_j[j]);
        EXPECT_NEAR(r.xi_bar_j[j], r2.xi_bar_j[j] + r.tamed_mu[j], 1e-12);
        EXPECT_NEAR(r.raw_mu[j], mu_interval(m, t, b, j, order), 1e-13);
        EXPECT_LE(std::abs(r.tamed_mu[j]), b.grid().coarse().step(j));
        EXPECT_EQ(r.tamed_mu[j], truncate(order - 0.5, b.grid().coarse().step(j), r.raw_mu[j]));
        sum += r.xi_bar_j[j];
      }
      EXPECT_NEAR(r.xi_bar, sum, 1e-12);
      EXPECT_NEAR(r.xi_bar, r.xi_untamed + eps, 1e-12);
    }
  }
}

TEST(Scheme, ConstantSensorIsExact) {
  const PosysModel m = load_model(HOFILT_SOURCE_DIR "/models/constant.json");
  const CoefficientTable t = build_table(m, 3);
  for (std::size_t n : {1u, 3u, 4u, 7u}) {
    const PathBundle b = bundle(m, n, 16, n);
    const double ref = xi_reference(m, b);
    for (int order : {1, 2, 3}) EXPECT_EQ(xi_bar(m, t, b, order).xi_bar, ref) << n << " " << order;
  }
}

TEST(Scheme, ApproachesReferenceAsMeshShrinks) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 2);
  double prev = std::numeric_limits<double>::infinity();
  const PathBundle fine = bundle(m, 4, 256, 13);
  const double ref = xi_reference(m, fine);
  for (std::size_t per : {256u, 64u, 16u}) {
    const PathBundle b = fine.regrouped(per);
    const double err = std::abs(xi_bar(m, t, b, 1).xi_bar - ref);
    EXPECT_LT(err, prev * 1.5);
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Scheme, IntervalsStreamWithPrefix) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 3);
  const PathBundle b = bundle(m, 8, 16, 17);
  const auto full = xi_bar(m, t, b, 3);
  for (std::size_t k = 1; k <= 8; ++k) {
    const auto part = xi_bar(m, t, b.prefix(k), 3);
    for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(part.xi_bar_j[j], full.xi_bar_j[j]);
  }
  WeightAccumulator acc;
  for (double v : full.xi_bar_j) acc.push(v);
  EXPECT_EQ(acc.intervals(), 8u);
  EXPECT_NEAR(acc.log_weight(), full.xi_bar, 1e-12);
  EXPECT_NEAR(acc.weight(), full.weight, 1e-12 * full.weight);
}

TEST(Scheme, Errors) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 2);
  const PathBundle b = bundle(m, 4, 8, 1);
  EXPECT_THROW(xi_bar(m, t, b, 3), OrderTooHigh);
  EXPECT_THROW(xi_bar(m, t, b, 0), DomainError);
  EXPECT_THROW(mu_interval(m, t, b, 0, 2), DomainError);
  EXPECT_THROW(xi_tau_m_interval(m, t, b, 4, 2), OutOfRange);
  // delta0 = 1 / (2 * 0.3) ~ 1.67; a horizon-2 single interval is inadmissible.
  PosysModel::Spec spec;
  spec.drift = {parse("-0.5*x1", 1)};
  spec.diffusion = {parse("0.3", 1)};
  spec.sensor = {parse("tanh(x1)", 1)};
  spec.lh_bound = 0.3;
  spec.horizon = 2.0;
  const PosysModel wide(spec);
  const PathBundle one = bundle(wide, 1, 8, 1);
  const CoefficientTable tw = build_table(wide, 2);
  EXPECT_NO_THROW(xi_bar(wide, tw, one, 1));
  EXPECT_THROW(xi_bar(wide, tw, one, 2), InadmissibleMesh);
  XiOptions o;
  o.override_mesh = true;
  EXPECT_NO_THROW(xi_bar(wide, tw, one, 2, o));
}

TEST(Scheme, LeanModeMatches) {
  const PosysModel m = benchmark();
  const CoefficientTable t = build_table(m, 3);
  const PathBundle b = bundle(m, 4, 16, 2);
  XiOptions lean;
  lean.keep_terms = false;
  const auto a = xi_bar(m, t, b, 3), c = xi_bar(m, t, b, 3, lean);
  EXPECT_EQ(a.xi_bar, c.xi_bar);
  EXPECT_TRUE(c.terms.empty());
}

TEST(Scheme, OverflowIsReported) {
  PosysModel::Spec spec;
  spec.drift = {parse("0", 1)};
  spec.diffusion = {parse("0", 1)};
  spec.sensor = {parse("100", 1)};
  spec.lh_bound = 0.0;
  spec.horizon = 1.0;
  const PosysModel m(spec);
  const PathBundle b = bundle(m, 1, 4, 1);
  EXPECT_THROW(xi_reference(m, b), NumericalError);
  EXPECT_THROW(xi_bar(m, build_table(m, 1), b, 1), NumericalError);
}
