#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "rwsre/quenched.hpp"
#include "rwsre/reflected.hpp"
#include "rwsre/stats.hpp"
#include "rwsre/walk.hpp"

using namespace rwsre;

namespace {

EnvironmentSpec canonical(double beta) {
  return {GapLaw(beta), DriftLaw({{0.75, 2.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0}})};
}

}  // namespace

TEST(Reflected, MomentsOfPassageTime) {
  Stream rng(1);
  for (std::int64_t m : {1, 5, 20, 150}) {
    Moments t, z;
    for (int i = 0; i < 40000; ++i) {
      const auto r = sample_reflected_passage_detail(m, rng);
      ASSERT_EQ((r.time - static_cast<std::uint64_t>(m)) % 2, 0u);
      t.add(static_cast<double>(r.time));
      z.add(static_cast<double>(r.zero_returns));
    }
    const double md = static_cast<double>(m);
    EXPECT_NEAR(t.mean(), md * md, 4.0 * t.se_mean() + 1e-12) << m;
    EXPECT_NEAR(t.variance(), (2.0 / 3.0) * (md * md * md * md - md * md),
                4.0 * t.se_variance() + 1e-12) << m;
    EXPECT_NEAR(z.mean(), md - 1.0, 4.0 * z.se_mean() + 1e-12) << m;
  }
  EXPECT_THROW(sample_reflected_passage(0, rng), ValidationError);
}

TEST(Walk, DirectPassageParityAndDeterminism) {
  const auto env = sample_environment(canonical(1.5), 50, 1e-10, 3);
  for (std::int64_t n : {1, 7, 40}) {
    Stream a(5, 0, static_cast<std::uint64_t>(n), Purpose::walk);
    Stream b(5, 0, static_cast<std::uint64_t>(n), Purpose::walk);
    const auto r = direct_passage(env, n, a);
    EXPECT_EQ(r.T, direct_passage(env, n, b).T);
    EXPECT_EQ((r.T - static_cast<std::uint64_t>(n)) % 2, 0u);
    EXPECT_LE(r.S_last, n);
  }
}

TEST(Walk, BlockTierMatchesExactMean) {
  const auto env = sample_environment(canonical(1.5), 60, 1e-10, 11);
  const auto pot = compute_potentials(env);
  const std::int64_t n = 60;
  const double mean = mean_passage_time(pot, n);
  Moments m;
  Stream rng(4);
  for (int i = 0; i < 20000; ++i) m.add(static_cast<double>(block_passage(env, n, rng).T));
  EXPECT_NEAR(m.mean(), mean, 4.0 * m.se_mean());
}

TEST(Walk, DirectAndBlockAgreeInLaw) {
  const auto env = sample_environment(canonical(1.5), 40, 1e-10, 2);
  std::vector<double> d, b;
  Stream r1(1), r2(2);
  for (int i = 0; i < 5000; ++i) {
    d.push_back(static_cast<double>(direct_passage(env, 20, r1).T));
    b.push_back(static_cast<double>(block_passage(env, 20, r2).T));
  }
  EXPECT_GT(ks_two_sample(d, b).p_value, 0.001);
}

TEST(Walk, BlockCrossingSplitMatchesFormulas) {
  const auto env = sample_environment(canonical(1.5), 20, 1e-10, 8);
  const auto pot = compute_potentials(env);
  const std::int64_t k = 3;
  Moments l, r;
  Stream rng(6);
  for (int i = 0; i < 40000; ++i) {
    const auto c = block_crossing(env, k, rng);
    l.add(static_cast<double>(c.t_left));
    r.add(static_cast<double>(c.t_right));
  }
  const double z = sidak_z(0.999, 4);
  const auto m = crossing_mean(pot, k);
  EXPECT_NEAR(l.mean(), m.left, z * l.se_mean());
  EXPECT_NEAR(r.mean(), m.right, z * r.se_mean() + 1e-12);
  EXPECT_NEAR(l.variance(), left_crossing_variance(pot, k), z * l.se_variance());
  EXPECT_NEAR(r.variance(), right_crossing_variance(env, k), z * r.se_variance() + 1e-12);
}

TEST(Walk, ReducedTierMoments) {
  const auto env = sample_environment(canonical(1.5), 300, 1e-10, 1);
  const std::int64_t n = 500;
  double v = 0.0;
  for (std::int64_t k = 1; k < env.nu(n); ++k) v += (2.0 / 3.0) * std::pow(env.xi(k), 4.0);
  const double d = static_cast<double>(n - env.S(env.nu(n) - 1));
  v += (2.0 / 3.0) * d * d * d * d;
  Moments m;
  Stream rng(2);
  for (int i = 0; i < 40000; ++i) m.add(reduced_passage(env, n, rng));
  EXPECT_NEAR(m.mean(), 0.0, 4.0 * m.se_mean());
  EXPECT_NEAR(m.variance(), v, 4.0 * m.se_variance());
}

TEST(Walk, LeavingTheWindowThrows) {
  // Index 0 is the left edge and pushes left almost surely.
  const Environment env(0, {1, 3, 3}, {0.01, 0.6, 0.6});
  Stream rng(1);
  EXPECT_THROW(direct_passage(env, 5, rng), WindowExhausted);
}

TEST(Walk, TargetBeyondWindowRejected) {
  const auto env = sample_environment(canonical(1.5), 10, 1e-10, 1);
  Stream rng(1);
  EXPECT_THROW(direct_passage(env, env.right_boundary(), rng), ValidationError);
}

TEST(Walk, EmpiricalMeasureIndependentOfWorkers) {
  const auto env = sample_environment(canonical(1.5), 50, 1e-10, 4);
  const auto pot = compute_potentials(env);
  const auto a = quenched_empirical_measure(env, pot, 40, 300, Tier::block, 100.0, 7, 4, 1);
  const auto b = quenched_empirical_measure(env, pot, 40, 300, Tier::block, 100.0, 7, 4, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]);
}

TEST(Walk, PassageScaleByRegime) {
  EXPECT_EQ(regime_of(GapLaw(1.5)), Regime::moderate);
  EXPECT_EQ(regime_of(GapLaw(1.0)), Regime::critical);
  EXPECT_EQ(regime_of(GapLaw(0.8)), Regime::strong);
  EXPECT_NEAR(passage_scale(GapLaw(1.5), Regime::moderate, 1000.0), 1e4, 1e-6);
  EXPECT_NEAR(passage_scale(GapLaw(0.8), Regime::strong, 1000.0), 1e6, 1e-6);
  const ScalingSequences s(GapLaw(1.0));
  EXPECT_NEAR(passage_scale(GapLaw(1.0), Regime::critical, 1e4), std::pow(s.a(s.c(1e4)), 2.0), 1e-6);
}

TEST(Walk, TierNames) {
  for (auto t : {Tier::direct, Tier::block, Tier::reduced}) EXPECT_EQ(tier_from_string(to_string(t)), t);
  EXPECT_THROW(tier_from_string("fast"), ValidationError);
}
