#include <gtest/gtest.h>

#include <cmath>

#include "chain_oracle.hpp"
#include "helpers.hpp"
#include "rwsre/quenched.hpp"
#include "rwsre/stats.hpp"
#include "rwsre/walk.hpp"

using namespace rwsre;

namespace {

// xi = 1 everywhere and rho = 1/2: W = 1 up to a 2^-L remainder.
Environment unit_gaps(std::int64_t left, std::int64_t right) {
  const auto n = static_cast<std::size_t>(left + right + 1);
  return testutil::walled(left, std::vector<std::int64_t>(n, 1),
                          std::vector<double>(n, 2.0 / 3.0));
}

}  // namespace

TEST(Potentials, UnitGapClosedForms) {
  const auto env = unit_gaps(80, 12);
  const auto pot = compute_potentials(env);
  EXPECT_NEAR(pot.W(0), 1.0, 1e-12);
  EXPECT_NEAR(crossing_mean(pot, 5).total, 3.0, 1e-12);
  const auto f = excursion_moments(pot, 5);
  EXPECT_NEAR(f.mean, 4.0, 1e-12);
  EXPECT_NEAR(f.var, 24.0, 1e-9);
  EXPECT_NEAR(left_crossing_variance(pot, 5), 24.0, 1e-9);
  EXPECT_NEAR(mean_passage_time(pot, 10), 30.0, 1e-10);
  EXPECT_NEAR(right_crossing_variance(1.0), 0.0, 0.0);
}

TEST(Potentials, TruncationCertificateAndTolerance) {
  const auto env = unit_gaps(80, 4);
  const auto pot = compute_potentials(env);
  EXPECT_LE(pot.trunc_err(0), 1e-20);
  // Without the wall the left product is 2^-10 > 1e-10.
  const Environment open(-10, std::vector<std::int64_t>(15, 1), std::vector<double>(15, 2.0 / 3.0));
  EXPECT_THROW(compute_potentials(open), ValidationError);
  EXPECT_NO_THROW(compute_potentials(open, 1e-2));
}

TEST(Potentials, RecursionMatchesSeries) {
  Stream rng(17);
  const auto env = testutil::small_random(rng, 6, 6, 9);
  const auto pot = compute_potentials(env);
  for (std::int64_t j = 0; j <= 5; ++j) {
    double w = 0.0;
    for (auto i = env.min_index() + 1; i <= j; ++i) w += env.xi(i) * env.pi(i, j);
    EXPECT_NEAR(pot.W(j), w, 1e-10 * (1.0 + w)) << j;
  }
}

TEST(ExitProbabilities, MatchTridiagonalSolve) {
  Stream rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const auto env = testutil::small_random(rng, 3, 10, 12, 0.05, 0.95);
    const auto pot = compute_potentials(env);
    const std::int64_t i = -2, j = 9;
    const auto v = oracle::exit_right(env, env.S(i), env.S(j));
    for (std::int64_t k = i + 1; k < j; ++k) {
      const auto p = exit_probabilities(pot, i, k, j);
      ASSERT_NEAR(p.right, v[static_cast<std::size_t>(env.S(k) - env.S(i))], 1e-10);
      ASSERT_NEAR(p.left + p.right, 1.0, 1e-12);
    }
  }
}

TEST(CrossingMoments, MeansMatchLinearSolve) {
  Stream rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto env = testutil::small_random(rng, 4, 8, 10);
    const auto pot = compute_potentials(env);
    const auto lo = env.S(env.min_index());
    for (std::int64_t k = 1; k <= 8; ++k) {
      const auto h = oracle::hitting_moments(env, env.S(k));
      const double m = h.mean[static_cast<std::size_t>(env.S(k - 1) - lo)];
      ASSERT_NEAR(crossing_mean(pot, k).total, m, 1e-9 * m);
      // Excursion from S_k: one step left, then back to S_k.
      if (k < 8) {
        const auto h2 = oracle::hitting_moments(env, env.S(k));
        const auto at = static_cast<std::size_t>(env.S(k) - 1 - lo);
        const double mean = 1.0 + h2.mean[at];
        const double var = h2.second[at] - h2.mean[at] * h2.mean[at];
        const auto f = excursion_moments(pot, k);
        ASSERT_NEAR(f.mean, mean, 1e-9 * mean);
        ASSERT_NEAR(f.var, var, 1e-8 * var);
      }
    }
    // Passage to arbitrary, unmarked targets.
    for (std::int64_t m = 1; m < env.S(8); m += 3) {
      const auto h = oracle::hitting_moments(env, m);
      const double e = h.mean[static_cast<std::size_t>(-lo)];
      ASSERT_NEAR(mean_passage_time(pot, m), e, 1e-9 * e);
    }
  }
}

TEST(CrossingMoments, PrintedExcursionVarianceDiffersForWideGaps) {
  // Wall, gap 1, drifted site with lambda 0.7, then a gap of 2.
  const auto env = testutil::walled(0, {1, 1, 2, 1}, {1.0, 0.7, 0.5, 0.5});
  const auto pot = compute_potentials(env);
  const auto h = oracle::hitting_moments(env, env.S(2));
  const auto at = static_cast<std::size_t>(env.S(2) - 1 - env.S(env.min_index()));
  const double var = h.second[at] - h.mean[at] * h.mean[at];
  EXPECT_NEAR(var, 920.0 / 49.0, 1e-9);
  EXPECT_NEAR(excursion_moments(pot, 2).var, var, 1e-9);
  EXPECT_GT(std::abs(excursion_variance_printed(pot, 2) - var), 2.0);
}

TEST(CrossingMoments, CumulativeTableIsConsistent) {
  Stream rng(5);
  const auto env = testutil::small_random(rng, 5, 30, 20);
  const auto pot = compute_potentials(env);
  const auto q = cumulative_moments(pot, 30);
  ASSERT_EQ(q.rows.size(), 30u);
  double cm = 0.0;
  for (const auto& r : q.rows) {
    cm += r.mean_left + r.mean_right;
    ASSERT_NEAR(r.cum_mean, cm, 1e-9 * cm);
    ASSERT_GE(r.var_left, 0.0);
    ASSERT_NEAR(r.var_right, (2.0 / 3.0) * (std::pow(r.xi, 4.0) - std::pow(r.xi, 2.0)), 1e-6);
  }
  // The last marked site is the generated extent; passage there is not defined.
  const double m29 = q.rows[28].cum_mean;
  EXPECT_NEAR(mean_passage_time(pot, env.S(29)), m29, 1e-9 * m29);
  EXPECT_THROW(cumulative_moments(pot, 31), ValidationError);
}

// Formula values against direct-walk Monte Carlo, with Sidak-adjusted
// simultaneous intervals over the whole family of checks.
TEST(CrossingMoments, DirectWalkMonteCarlo) {
  Stream envs(31);
  const auto env = testutil::small_random(envs, 4, 5, 6);
  const auto pot = compute_potentials(env);
  const std::int64_t k = 4, p = 1;
  Moments tl, tr, arrivals, below;
  Stream rng(77);
  for (int i = 0; i < 40000; ++i) {
    const auto d = direct_crossing_detail(env, k, rng, p);
    tl.add(static_cast<double>(d.sample.t_left));
    tr.add(static_cast<double>(d.sample.t_right));
    arrivals.add(static_cast<double>(d.barrier_arrivals));
    below.add(static_cast<double>(d.time_below));
  }
  const double z = sidak_z(0.999, 8);
  const auto m = crossing_mean(pot, k);
  EXPECT_NEAR(tl.mean(), m.left, z * tl.se_mean());
  EXPECT_NEAR(tr.mean(), m.right, z * tr.se_mean());
  EXPECT_NEAR(tl.variance(), left_crossing_variance(pot, k), z * tl.se_variance());
  EXPECT_NEAR(tr.variance(), right_crossing_variance(env, k), z * tr.se_variance());
  const auto bv = barrier_visit_moments(pot, p, k);
  EXPECT_NEAR(arrivals.mean(), bv.mean, z * arrivals.se_mean());
  EXPECT_NEAR(arrivals.variance(), bv.var, z * arrivals.se_variance());
  const auto ce = censored_excess_moments(pot, p, k);
  EXPECT_NEAR(below.mean(), ce.mean, z * below.se_mean());
  EXPECT_NEAR(below.variance(), ce.var, z * below.se_variance());
}

// The printed closed form of the left variance disagrees with the
// compound-sum identity, which the simulation confirms.
TEST(CrossingMoments, PrintedLeftVarianceIsInconsistent) {
  const auto env = unit_gaps(80, 12);
  const auto pot = compute_potentials(env);
  EXPECT_NEAR(left_crossing_variance_printed(pot, 5), 17.416666666666, 1e-6);
  EXPECT_GT(std::abs(left_crossing_variance_printed(pot, 5) - left_crossing_variance(pot, 5)), 1.0);
  Moments tl;
  Stream rng(8);
  for (int i = 0; i < 100000; ++i) tl.add(static_cast<double>(direct_crossing(env, 5, rng).t_left));
  EXPECT_NEAR(tl.variance(), 24.0, 4.0 * tl.se_variance());
  EXPECT_GT(std::abs(tl.variance() - 17.416666666666), 6.0 * tl.se_variance());
}

TEST(CrossingMoments, PreconditionsEnforced) {
  const auto env = unit_gaps(20, 5);
  const auto pot = compute_potentials(env, 1e-3);
  EXPECT_THROW(exit_probabilities(pot, 2, 2, 4), ValidationError);
  EXPECT_THROW(barrier_visit_moments(pot, 3, 4), ValidationError);
  EXPECT_THROW(censored_excess_moments(pot, 3, 4), ValidationError);
}
