#include <cmath>
#include <queue>
#include <set>

#include <gtest/gtest.h>

#include "mtrl/errors.hpp"
#include "mtrl/planner.hpp"
#include "test_util.hpp"

namespace mtrl::planner {
namespace {

RewardTable env_rewards(const LinearMdp& env, int task) { return env.task_rewards(task); }

TEST(Plan, SingleStateTwoActionsPicksBetterArmEachStep) {
  Matrix r(1, 2);
  r << 0.9, 0.5;
  const LinearMdp env = test::tabular_env({Matrix::Ones(2, 1), Matrix::Ones(2, 1)}, {{r, r}},
                                          Vector::Ones(1));
  const PlanResult res = plan(env, env_rewards(env, 0));
  EXPECT_NEAR(res.values.V[0](0), 1.8, 1e-12);
  EXPECT_EQ(res.policy.prob(0, 0, 0), 1.0);
  EXPECT_EQ(res.policy.prob(1, 0, 0), 1.0);
}

TEST(Plan, ZeroRewardsTieBreakToFirstAction) {
  const LinearMdp env = test::random_tabular_env(3, 3, 2, 1, 1);
  const PlanResult res = plan(env, RewardTable::zeros(3, 3, 2));
  for (int h = 0; h < 2; ++h) {
    for (int s = 0; s < 3; ++s) EXPECT_EQ(res.policy.prob(h, s, 0), 1.0);
    EXPECT_EQ(res.values.V[h].norm(), 0.0);
  }
}

TEST(Plan, MatchesBruteForceOnSmallMdps) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const LinearMdp env = test::random_tabular_env(2 + seed % 2, 2, 2 + seed % 2, 1, 100 + seed);
    const PlanResult res = plan(env, env_rewards(env, 0));
    const Vector best = test::brute_force_optimal(env, 0);
    for (int s = 0; s < env.n_states(); ++s) EXPECT_NEAR(res.values.V[0](s), best(s), 1e-9);
  }
}

TEST(Plan, GreedyActionsAchieveReportedValue) {
  const LinearMdp env = test::random_tabular_env(4, 3, 4, 1, 9);
  const PlanResult res = plan(env, env_rewards(env, 0));
  std::vector<std::vector<int>> act(4, std::vector<int>(4));
  for (int h = 0; h < 4; ++h) {
    for (int s = 0; s < 4; ++s) {
      res.policy.step(h).row(s).maxCoeff(&act[h][s]);
    }
  }
  for (int s = 0; s < 4; ++s) {
    EXPECT_NEAR(test::forward_value(env, act, 0, s), res.values.V[0](s), 1e-12);
  }
}

TEST(EvaluatePolicy, PlannedPolicyValueMatchesPlanner) {
  const LinearMdp env = test::random_tabular_env(3, 2, 3, 1, 3);
  const PlanResult res = plan(env, env_rewards(env, 0));
  const ValueTable v = evaluate_policy(env, res.policy, env_rewards(env, 0));
  for (int h = 0; h < 3; ++h) EXPECT_LE((v.V[h] - res.values.V[h]).norm(), 1e-12);
}

TEST(EvaluatePolicy, UniformPolicyOnConstantRewards) {
  Matrix r = Matrix::Constant(2, 2, 0.25);
  const LinearMdp env = test::tabular_env(
      {Matrix::Constant(4, 2, 0.5), Matrix::Constant(4, 2, 0.5)}, {{r, r}}, Vector::Ones(2) / 2);
  const ValueTable v =
      evaluate_policy(env, TabularPolicy::uniform(2, 2, 2), env_rewards(env, 0));
  EXPECT_NEAR(v.initial_value(env.initial_dist()), 0.5, 1e-15);
}

TEST(EvaluatePolicy, AgreesWithMonteCarloRollouts) {
  const LinearMdp env = test::random_tabular_env(3, 2, 3, 1, 4);
  const TabularPolicy pi = TabularPolicy::uniform(3, 2, 3);
  const double exact = evaluate_policy(env, pi, env_rewards(env, 0)).initial_value(env.initial_dist());
  Engine rng(5);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < n; ++e) {
    double g = 0.0;
    for (const auto& step : mdp::sample_episode(env, pi, 0, rng).steps) g += step.reward;
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, exact, 4.0 * se);
}

TEST(EmpiricalModel, UnvisitedRowsAreUniform) {
  EmpiricalModel model(3, 2, 2);
  EXPECT_EQ(model.n_unvisited(), 12);
  EXPECT_NEAR(model.kernel(0)(0, 1), 1.0 / 3.0, 1e-15);
  model.record(0, 1, 1, 2);
  model.record(0, 1, 1, 2);
  model.record(0, 1, 1, 0);
  EXPECT_EQ(model.visits(0, 1, 1), 3);
  EXPECT_EQ(model.n_unvisited(), 11);
  EXPECT_NEAR(model.kernel(0)(model.pair_index(1, 1), 2), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(model.kernel(0).row(model.pair_index(1, 1)).sum(), 1.0, 1e-15);
}

TEST(EmpiricalModel, FromCountsRebuildsKernel) {
  EmpiricalModel model(2, 1, 1);
  model.record(0, 0, 0, 1);
  model.record(0, 1, 0, 0);
  model.add_episode();
  const EmpiricalModel copy =
      EmpiricalModel::from_counts(2, 1, {model.transition_counts(0)}, model.episodes_used());
  EXPECT_EQ(copy.kernel(0), model.kernel(0));
  EXPECT_EQ(copy.episodes_used(), 1);
}

TEST(EmpiricalModel, RejectsOutOfRangeRecord) {
  EmpiricalModel model(2, 2, 1);
  EXPECT_THROW(model.record(0, 2, 0, 0), DimensionError);
}

TEST(RewardFreeExplore, SingleStateIsLearnedExactly) {
  const LinearMdp env = test::random_tabular_env(1, 2, 2, 1, 6);
  Engine rng(1);
  const EmpiricalModel model = reward_free_explore(mdp::RewardFreeView(env), 20, rng);
  EXPECT_EQ(model.episodes_used(), 20);
  for (int h = 0; h < 2; ++h) {
    for (int a = 0; a < 2; ++a) EXPECT_EQ(model.kernel(h)(a, 0), 1.0);
  }
}

// Deterministic chain 0 - 1 - ... - 5 with actions left / right, starting at 0.
LinearMdp chain_env(int S, int H) {
  Matrix kernel = Matrix::Zero(S * 2, S);
  for (int s = 0; s < S; ++s) {
    kernel(s * 2, std::max(0, s - 1)) = 1.0;
    kernel(s * 2 + 1, std::min(S - 1, s + 1)) = 1.0;
  }
  Vector init = Vector::Zero(S);
  init(0) = 1.0;
  return test::tabular_env(std::vector<Matrix>(H, kernel),
                           {std::vector<Matrix>(H, Matrix::Zero(S, 2))}, init);
}

TEST(RewardFreeExplore, VisitsEveryReachableCellOfAChain) {
  const int S = 6, H = 5;
  const LinearMdp env = chain_env(S, H);
  // Reachable states per step by breadth-first expansion.
  std::vector<std::set<int>> reachable(H);
  reachable[0] = {0};
  for (int h = 1; h < H; ++h) {
    for (const int s : reachable[h - 1]) {
      reachable[h].insert(std::max(0, s - 1));
      reachable[h].insert(std::min(S - 1, s + 1));
    }
  }
  Engine rng(2);
  const EmpiricalModel model =
      reward_free_explore(mdp::RewardFreeView(env), default_reward_free_budget(S, 2, H), rng);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < 2; ++a) {
        EXPECT_EQ(model.visits(h, s, a) > 0, reachable[h].count(s) == 1)
            << "h=" << h << " s=" << s << " a=" << a;
      }
    }
  }
}

TEST(RewardFreeExplore, EstimatesConcentrateOnLargeBudget) {
  const LinearMdp env = test::random_tabular_env(3, 2, 2, 1, 7);
  Engine rng(3);
  const EmpiricalModel model = reward_free_explore(mdp::RewardFreeView(env), 100000, rng);
  for (int h = 0; h < 2; ++h) {
    EXPECT_LE((model.kernel(h) - env.kernel(h)).cwiseAbs().maxCoeff(), 0.02);
  }
}

TEST(RewardFreeExplore, SameSeedSameCounts) {
  const LinearMdp env = test::random_tabular_env(3, 2, 2, 1, 8);
  Engine a(4), b(4);
  const EmpiricalModel ma = reward_free_explore(mdp::RewardFreeView(env), 500, a);
  const EmpiricalModel mb = reward_free_explore(mdp::RewardFreeView(env), 500, b);
  for (int h = 0; h < 2; ++h) EXPECT_EQ(ma.transition_counts(h), mb.transition_counts(h));
}

TEST(DefaultBudget, FiftyTimesSAH) { EXPECT_EQ(default_reward_free_budget(100, 6, 5), 150000); }

}  // namespace
}  // namespace mtrl::planner
