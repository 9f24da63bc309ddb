#include "linqrl/mdp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "linqrl/errors.hpp"
#include "linqrl/rng.hpp"
#include "test_fixtures.hpp"

namespace linqrl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(DpSolve, HandExampleMatchesOracleValues) {
  const FiniteMdp mdp = testing_fixtures::hand_mdp();
  const DpSolution dp = dp_solve(mdp);
  EXPECT_NEAR(dp.q(1, 0, 0), 0.3, 1e-12);
  EXPECT_NEAR(dp.q(1, 0, 1), 1.1, 1e-12);
  EXPECT_NEAR(dp.v_star.at(1, 0), 1.1, 1e-12);
  EXPECT_NEAR(dp.gap(1, 0), 0.8, 1e-12);
  EXPECT_NEAR(dp.gap(2, 0), 0.2, 1e-12);
  EXPECT_NEAR(dp.gap(2, 1), 0.5, 1e-12);
  EXPECT_NEAR(dp.gap_global, 0.2, 1e-12);
  EXPECT_EQ(dp.gap(1, 1), kInf);  // both actions lead to s1 with zero reward
  EXPECT_EQ(dp.greedy_policy.action(1, 0), 1);
  EXPECT_EQ(dp.optimal_actions[0], std::vector<Action>{1});
}

TEST(DpSolve, HorizonOneEqualsReward) {
  Rng rng(3);
  const FiniteMdp mdp = testing_fixtures::random_mdp(rng, 1, 4, 3);
  const DpSolution dp = dp_solve(mdp);
  for (State s = 0; s < 4; ++s) {
    for (Action a = 0; a < 3; ++a) EXPECT_EQ(dp.q(1, s, a), mdp.reward(1, s, a));
  }
}

TEST(DpSolve, ZeroRewardsGiveInfiniteGap) {
  Rng rng(4);
  FiniteMdp base = testing_fixtures::random_mdp(rng, 3, 3, 2);
  FiniteMdp mdp(3, 3, 2, base.transition_data(), std::vector<double>(18, 0.0));
  const DpSolution dp = dp_solve(mdp);
  for (double q : dp.q_star) EXPECT_EQ(q, 0.0);
  EXPECT_EQ(dp.gap_global, kInf);
  for (const auto& set : dp.optimal_actions) EXPECT_EQ(set.size(), 2u);
}

TEST(DpSolve, TiesBreakToLowestIndex) {
  FiniteMdp mdp(1, 1, 3, {1, 1, 1}, {0.5, 0.7, 0.7});
  const DpSolution dp = dp_solve(mdp);
  EXPECT_EQ(dp.greedy_policy.action(1, 0), 1);
  EXPECT_EQ(dp.optimal_actions[0], (std::vector<Action>{1, 2}));
  EXPECT_NEAR(dp.gap(1, 0), 0.2, 1e-15);
}

TEST(DpSolve, MatchesBruteForcePolicyEnumeration) {
  // Oracle: maximize exact forward-propagated returns over every
  // deterministic policy.
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    const int H = 3, S = 3, A = 2;
    const FiniteMdp mdp = testing_fixtures::random_mdp(rng, H, S, A);
    const DpSolution dp = dp_solve(mdp);
    for (State s1 = 0; s1 < S; ++s1) {
      double best = -kInf;
      const int cells = H * S;
      for (int code = 0; code < (1 << cells); ++code) {
        std::vector<Action> actions(static_cast<std::size_t>(cells));
        for (int c = 0; c < cells; ++c) actions[static_cast<std::size_t>(c)] = (code >> c) & 1;
        best = std::max(best, testing_fixtures::forward_return(mdp, DeterministicPolicy(H, S, actions), s1));
      }
      EXPECT_NEAR(dp.v_star.at(1, s1), best, 1e-12) << "seed " << seed << " s1 " << s1;
    }
  }
}

TEST(DpSolve, BellmanResidualAndRanges) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    const int H = 4, S = 5, A = 3;
    const FiniteMdp mdp = testing_fixtures::random_mdp(rng, H, S, A);
    const DpSolution dp = dp_solve(mdp);
    for (int h = 1; h <= H; ++h) {
      for (State s = 0; s < S; ++s) {
        double vmax = -kInf;
        for (Action a = 0; a < A; ++a) {
          const double backup = mdp.reward(h, s, a) + (h < H ? mdp.expected(h, s, a, dp.v_star.step(h + 1)) : 0.0);
          ASSERT_LE(std::abs(dp.q(h, s, a) - backup), 1e-10);
          ASSERT_GE(dp.q(h, s, a), 0.0);
          ASSERT_LE(dp.q(h, s, a), H);
          vmax = std::max(vmax, dp.q(h, s, a));
        }
        ASSERT_EQ(dp.v_star.at(h, s), vmax);
        ASSERT_GT(dp.gap(h, s), 0.0);
      }
    }
  }
}

TEST(PolicyEvaluate, GreedyPolicyAttainsOptimum) {
  Rng rng(8);
  const FiniteMdp mdp = testing_fixtures::random_mdp(rng, 4, 6, 3);
  const DpSolution dp = dp_solve(mdp);
  const ValueTable v = policy_evaluate(mdp, dp.greedy_policy);
  for (int h = 1; h <= 4; ++h) {
    for (State s = 0; s < 6; ++s) EXPECT_NEAR(v.at(h, s), dp.v_star.at(h, s), 1e-10);
  }
}

TEST(PolicyEvaluate, HandExampleFixedPolicies) {
  const FiniteMdp mdp = testing_fixtures::hand_mdp();
  // a0 everywhere collects r_1(s0,a0) + r_2(s0,a0) = 0 + 0.1.
  const DeterministicPolicy all_a0(2, 2, 0);
  EXPECT_NEAR(policy_evaluate(mdp, all_a0).at(1, 0), 0.1, 1e-15);
  EXPECT_NEAR(testing_fixtures::forward_return(mdp, all_a0, 0), 0.1, 1e-15);
  // a0 at step 1 followed by the best step-2 action attains Q⋆_1(s0,a0) = 0.3.
  DeterministicPolicy a0_then_best(2, 2, 0);
  a0_then_best.set_action(2, 0, 1);
  EXPECT_NEAR(policy_evaluate(mdp, a0_then_best).at(1, 0), 0.3, 1e-15);
}

TEST(PolicyEvaluate, ZeroRewardMdpHasZeroValue) {
  FiniteMdp mdp(2, 2, 2, std::vector<double>(16, 0.5), std::vector<double>(8, 0.0));
  const ValueTable v = policy_evaluate(mdp, DeterministicPolicy(2, 2, {1, 0, 0, 1}));
  for (int h = 1; h <= 3; ++h) {
    for (State s = 0; s < 2; ++s) EXPECT_EQ(v.at(h, s), 0.0);
  }
}

TEST(PolicyEvaluate, NeverExceedsOptimalValue) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 300);
    const int H = 3, S = 4, A = 3;
    const FiniteMdp mdp = testing_fixtures::random_mdp(rng, H, S, A);
    const DpSolution dp = dp_solve(mdp);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Action> actions(static_cast<std::size_t>(H * S));
      for (auto& a : actions) a = static_cast<Action>(rng.below(A));
      const DeterministicPolicy pi(H, S, actions);
      const ValueTable v = policy_evaluate(mdp, pi);
      for (int h = 1; h <= H; ++h) {
        for (State s = 0; s < S; ++s) {
          ASSERT_LE(v.at(h, s), dp.v_star.at(h, s) + 1e-10);
          ASSERT_GE(v.at(h, s), 0.0);
        }
      }
      EXPECT_NEAR(v.at(1, 0), testing_fixtures::forward_return(mdp, pi, 0), 1e-12);
    }
  }
}

TEST(FitLinearQ, OneHotFeaturesReproduceAnyTable) {
  Rng rng(12);
  const FiniteMdp mdp = testing_fixtures::random_mdp(rng, 3, 3, 2);
  const FeatureMap phi = testing_fixtures::one_hot(3, 3, 2);
  const LinearFit fit = fit_linear_q(mdp, phi, dp_solve(mdp));
  EXPECT_EQ(fit.max_residual, 0.0);
  for (bool flag : fit.rank_deficient) EXPECT_FALSE(flag);
}

TEST(FitLinearQ, ZeroFeaturesGiveZeroThetaAndMaxQResidual) {
  Rng rng(13);
  const FiniteMdp mdp = testing_fixtures::random_mdp(rng, 2, 3, 2);
  const FeatureMap phi(2, 3, 2, 3, std::vector<double>(36, 0.0));
  const DpSolution dp = dp_solve(mdp);
  const LinearFit fit = fit_linear_q(mdp, phi, dp);
  for (const auto& theta : fit.theta) EXPECT_EQ(theta, Vector::Zero(3));
  double max_q = 0.0;
  for (double q : dp.q_star) max_q = std::max(max_q, q);
  EXPECT_EQ(fit.max_residual, max_q);
  for (bool flag : fit.rank_deficient) EXPECT_TRUE(flag);
}

TEST(FitLinearQ, RankDeficientUsesMinimumNorm) {
  // Both coordinates are always equal, so the minimum-norm solution splits
  // the weight evenly.
  const double c = 1.0 / std::sqrt(2.0);
  FiniteMdp mdp(1, 1, 2, {1, 1}, {0.5, 0.25});
  FeatureMap phi(1, 1, 2, 2, {c, c, 0.5 * c, 0.5 * c});
  const LinearFit fit = fit_linear_q(mdp, phi, dp_solve(mdp));
  EXPECT_TRUE(fit.rank_deficient[0]);
  EXPECT_NEAR(fit.theta[0][0], fit.theta[0][1], 1e-14);
  EXPECT_NEAR(fit.max_residual, 0.0, 1e-14);
}

TEST(FiniteMdp, RejectsBadRows) {
  EXPECT_THROW(FiniteMdp(1, 2, 1, {0.5, 0.4, 1, 0}, {0, 0}), ValidationError);
  EXPECT_THROW(FiniteMdp(1, 2, 1, {1.2, -0.2, 1, 0}, {0, 0}), ValidationError);
  EXPECT_THROW(FiniteMdp(1, 1, 1, {1}, {1.5}), ValidationError);
  EXPECT_THROW(FiniteMdp(1, 1, 1, {1, 0}, {0.5}), ValidationError);
  EXPECT_THROW(FiniteMdp(0, 1, 1, {}, {}), ValidationError);
}

TEST(FeatureMap, RejectsNormAboveOne) {
  EXPECT_THROW(FeatureMap(1, 1, 1, 2, {1.5, 0}), ValidationError);
  EXPECT_NO_THROW(FeatureMap(1, 1, 1, 2, {0.6, 0.8}));
}

TEST(FeatureMap, FlattenRoundTrips) {
  const std::vector<double> raw = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.0};
  EXPECT_EQ(FeatureMap(1, 2, 2, 2, raw).flatten(), raw);
}

}  // namespace
}  // namespace linqrl
