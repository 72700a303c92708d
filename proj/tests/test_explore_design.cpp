#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "mtrl/errors.hpp"
#include "mtrl/explore_design.hpp"
#include "test_util.hpp"

namespace mtrl::design {
namespace {

const double kSqrt2 = std::sqrt(2.0);

// One state, two actions with psi = e1 and e2, over H steps.
LinearMdp two_arm_env(int H) {
  std::vector<Matrix> kernels(H, Matrix::Ones(2, 1));
  std::vector<Matrix> rewards(H, Matrix::Zero(1, 2));
  return test::tabular_env(kernels, {rewards}, Vector::Ones(1));
}

// Basis with M samples all in state 0, phi rows given per step.
FeatureBasis manual_basis(const std::vector<Matrix>& phi) {
  FeatureBasis b;
  b.M = static_cast<int>(phi.front().rows());
  for (const Matrix& p : phi) {
    b.states.emplace_back(b.M, 0);
    b.actions.emplace_back(b.M, 0);
    b.phi.push_back(p);
    b.gram.push_back(p.transpose() * p);
  }
  return b;
}

// min over the net of (1/M) sum_m sum_a f(s_m, a, x) pi(a | s_m), evaluated directly.
double design_value(const FeatureBasis& basis, const LinearMdp& env, const Matrix& pi, double xi,
                    const XNet& net) {
  double worst = INFINITY;
  for (int k = 0; k < net.size(); ++k) {
    const Vector x = net.dense(k);
    double total = 0.0;
    for (int m = 0; m < basis.M; ++m) {
      const int s = basis.states[0][m];
      for (int a = 0; a < env.n_actions(); ++a) {
        total += eval_f(env.psi(s, a).transpose(), x, xi) * pi(s, a);
      }
    }
    worst = std::min(worst, total / basis.M);
  }
  return worst;
}

TEST(EvalF, ZeroPsiGivesZero) {
  EXPECT_EQ(eval_f(Vector::Zero(3), Vector::Unit(3, 0), 0.25), 0.0);
}

TEST(EvalF, AlignedUnitVectors) {
  EXPECT_NEAR(eval_f(Vector::Unit(4, 1), Vector::Unit(4, 1), 0.1), 1.6, 1e-15);
}

TEST(EvalF, MatchesDirectFormula) {
  Engine rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vector psi = test::random_gaussian(5, 1, rng) * 0.3;
    Vector x = test::random_gaussian(5, 1, rng);
    x.normalize();
    double ip = 0.0;
    for (int j = 0; j < 5; ++j) ip += psi(j) * x(j);
    const double expected = std::fabs(ip) * std::sqrt(5.0) - 0.25 * 5.0 * ip * ip;
    EXPECT_NEAR(eval_f(psi, x, 0.25), expected, 1e-12);
  }
}

TEST(EvalF, RejectsNonUnitDirection) {
  EXPECT_THROW(eval_f(Vector::Zero(2), Vector::Ones(2), 0.1), ParameterError);
}

TEST(XNet, DefaultSizeHoldsStructuredPoints) {
  const XNet net = build_x_net(3, default_x_net_size(3), 7);
  EXPECT_EQ(net.size(), 18);
  std::set<std::vector<double>> unique;
  for (int k = 0; k < net.size(); ++k) {
    const Vector x = net.dense(k);
    EXPECT_NEAR(x.norm(), 1.0, 1e-12);
    unique.insert(std::vector<double>(x.data(), x.data() + x.size()));
  }
  EXPECT_EQ(unique.size(), 18u);
  EXPECT_EQ(net.dense(0), Vector::Unit(3, 0));
}

TEST(XNet, PaddedPointsAreSeededUnitVectors) {
  const XNet a = build_x_net(2, 20, 3);
  const XNet b = build_x_net(2, 20, 3);
  ASSERT_EQ(a.size(), 20);
  for (int k = 0; k < 20; ++k) {
    EXPECT_NEAR(a.dense(k).norm(), 1.0, 1e-12);
    EXPECT_EQ(a.dense(k), b.dense(k));
  }
}

TEST(SolvePi1, TwoOrthogonalArmsGiveUniformPolicy) {
  const LinearMdp env = two_arm_env(1);
  const FeatureBasis basis = manual_basis({Matrix::Identity(2, 2)});
  const XNet net = XNet::from_dense(Matrix::Identity(2, 2));
  const MinimaxSolution sol = solve_pi1(basis, env, 0.1, net);
  EXPECT_NEAR(sol.value, 0.5 * (kSqrt2 - 0.2), 1e-9);
  EXPECT_NEAR(sol.pi(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(sol.pi(0, 1), 0.5, 1e-9);

  // Grid search over the policy simplex.
  double grid_best = -INFINITY;
  for (int i = 0; i <= 1000; ++i) {
    Matrix pi(1, 2);
    pi << i / 1000.0, 1.0 - i / 1000.0;
    grid_best = std::max(grid_best, design_value(basis, env, pi, 0.1, net));
  }
  EXPECT_NEAR(sol.value, grid_best, 1e-9);
}

TEST(SolvePi1, IdenticalFeaturesGiveUniformPolicy) {
  mdp::LinearMdpParts parts;
  parts.n_states = 1;
  parts.n_actions = 3;
  parts.horizon = 1;
  parts.n_tasks = 1;
  parts.feature_dim = 2;
  parts.psi = Matrix::Constant(3, 2, 0.5);
  parts.phi = Matrix::Constant(3, 2, 0.5);
  parts.mu = {Matrix::Ones(2, 1)};
  parts.theta_star = {Matrix::Zero(1, 2)};
  parts.initial_dist = Vector::Ones(1);
  const LinearMdp env(parts);
  const FeatureBasis basis = manual_basis({Matrix::Constant(1, 2, 0.5)});
  const MinimaxSolution sol = solve_pi1(basis, env, 0.1, build_x_net(2, 8, 1));
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(sol.pi(0, a), 1.0 / 3.0, 1e-9);
}

TEST(SolvePi1, SinglePointNetGivesPointMassOnBestAction) {
  const LinearMdp env = two_arm_env(1);
  const FeatureBasis basis = manual_basis({Matrix::Identity(2, 2)});
  Matrix x(2, 1);
  x << 0.6, 0.8;
  const MinimaxSolution sol = solve_pi1(basis, env, 0.1, XNet::from_dense(x));
  // The spread step may give up 1e-9 (1 + |value|) of the optimum.
  EXPECT_NEAR(sol.pi(0, 1), 1.0, 1e-7);
  EXPECT_NEAR(sol.value, eval_f(Vector::Unit(2, 1), x.col(0), 0.1), 1e-8);
}

TEST(SolvePi1, RejectsEmptyNet) {
  const LinearMdp env = two_arm_env(1);
  XNet empty;
  empty.dim = 2;
  EXPECT_THROW(solve_pi1(manual_basis({Matrix::Identity(2, 2)}), env, 0.1, empty),
               ParameterError);
}

TEST(SolvePi1, BeatsRandomPolicyProbe) {
  const LinearMdp env = mdp::gen_experiment1({6, 6, 2, 12, 4, 2}, 3);
  Engine rng(4);
  const planner::EmpiricalModel model =
      planner::reward_free_explore(mdp::RewardFreeView(env), 5000, rng);
  const FeatureBasis basis = collect_feature_basis(env, model, rng);
  const XNet net = build_x_net(6, default_x_net_size(6), 5);
  const MinimaxSolution sol = solve_pi1(basis, env, 0.25, net);
  EXPECT_NEAR(design_value(basis, env, sol.pi, 0.25, net), sol.value, 1e-7);
  for (int probe = 0; probe < 1000; ++probe) {
    const Matrix pi = test::random_stochastic(env.n_states(), env.n_actions(), rng);
    ASSERT_LE(design_value(basis, env, pi, 0.25, net), sol.value + 1e-9);
  }
}

TEST(SolvePih, SingleSampleReducesToWeightedFirstStep) {
  const LinearMdp env = two_arm_env(2);
  const FeatureBasis basis = manual_basis({Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const XNet net = XNet::from_dense(Matrix::Identity(2, 2));
  const MinimaxSolution first = solve_pi1(basis, env, 0.1, net);
  const MinimaxSolution later = solve_pih(basis, env, 1, 0.1, net);
  // The state weight is z^T nu with z = G^-1 (e1 + e2) / 2, largest at
  // nu = (1, 1) / sqrt(2) where it equals 1 / sqrt(2).
  EXPECT_NEAR(later.value, first.value / kSqrt2, 1e-9);
  EXPECT_NEAR(later.pi(0, 0), first.pi(0, 0), 1e-9);
  EXPECT_LE(later.nu.norm(), 1.0 + 1e-12);
}

TEST(SolvePih, ValueIsNonNegativeAndNuInBall) {
  const LinearMdp env = mdp::gen_experiment1({6, 6, 2, 12, 4, 3}, 8);
  Engine rng(9);
  const planner::EmpiricalModel model =
      planner::reward_free_explore(mdp::RewardFreeView(env), 5000, rng);
  const FeatureBasis basis = collect_feature_basis(env, model, rng);
  const XNet net = build_x_net(6, default_x_net_size(6), 10);
  for (int h = 1; h < 3; ++h) {
    const MinimaxSolution sol = solve_pih(basis, env, h, 0.25, net);
    EXPECT_GE(sol.value, 0.0);
    EXPECT_LE(sol.nu.norm(), 1.0 + 1e-12);
    for (std::size_t i = 1; i < sol.value_history.size(); ++i) {
      EXPECT_GE(sol.value_history[i], sol.value_history[i - 1]);
    }
    EXPECT_LE((sol.pi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
  }
}

TEST(SolvePih, RejectsFirstStep) {
  const LinearMdp env = two_arm_env(2);
  const FeatureBasis basis = manual_basis({Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  EXPECT_THROW(solve_pih(basis, env, 0, 0.1, XNet::from_dense(Matrix::Identity(2, 2))),
               ParameterError);
}

TEST(CollectFeatureBasis, UnreachableDirectionIsReported) {
  mdp::LinearMdpParts parts;
  parts.n_states = 1;
  parts.n_actions = 1;
  parts.horizon = 1;
  parts.n_tasks = 1;
  parts.feature_dim = 2;
  parts.psi = Matrix::Zero(1, 2);
  parts.psi(0, 0) = 1.0;
  parts.phi = parts.psi;
  parts.mu = {Matrix::Ones(2, 1)};
  parts.theta_star = {Matrix::Zero(1, 2)};
  parts.initial_dist = Vector::Ones(1);
  const LinearMdp env(parts);
  Engine rng(1);
  try {
    collect_feature_basis(env, planner::EmpiricalModel(1, 1, 1), rng);
    FAIL() << "expected CoverageUnattainable";
  } catch (const CoverageUnattainable& e) {
    EXPECT_EQ(e.h(), 0);
    EXPECT_NEAR(std::abs(e.direction()(1)), 1.0, 1e-9);
  }
}

TEST(CollectFeatureBasis, GridMazeReachesUnitEigenvalue) {
  const LinearMdp env = mdp::gen_gridmaze({5, {{1, 1}, {3, 3}, {5, 5}}, 6});
  Engine rng(2);
  const planner::EmpiricalModel model = planner::reward_free_explore(
      mdp::RewardFreeView(env), planner::default_reward_free_budget(25, 4, 6), rng);
  const FeatureBasis basis = collect_feature_basis(env, model, rng);
  EXPECT_LE(basis.M, 2000);
  for (int h = 0; h < 6; ++h) EXPECT_GE(basis.lambda_min(h), 1.0 - 1e-9);
}

TEST(AssembleExplorationPolicy, KeepsSampledRowsAndFallsBackToUniform) {
  const LinearMdp env = test::random_tabular_env(3, 2, 2, 1, 1);
  MinimaxSolution all;
  all.pi = Matrix::Zero(3, 2);
  all.pi.col(1).setOnes();
  all.sampled = {1, 1, 1};
  MinimaxSolution none;
  none.h = 1;
  none.pi = Matrix::Zero(3, 2);
  none.sampled = {0, 0, 0};
  const TabularPolicy pi = assemble_exploration_policy({all, none}, env);
  EXPECT_EQ(pi.step(0), all.pi);
  EXPECT_EQ(pi.step(1), Matrix::Constant(3, 2, 0.5));
}

TEST(AssembleExplorationPolicy, GridMazeDesignCoversMostStates) {
  const LinearMdp env = mdp::gen_gridmaze({5, {{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}}, 10});
  Engine rng(3);
  const planner::EmpiricalModel model = planner::reward_free_explore(
      mdp::RewardFreeView(env), planner::default_reward_free_budget(25, 4, 10), rng);
  const FeatureBasis basis = collect_feature_basis(env, model, rng);
  const XNet net = build_x_net(100, default_x_net_size(100), 4);
  std::vector<MinimaxSolution> sols{solve_pi1(basis, env, 0.25, net)};
  for (int h = 1; h < 10; ++h) sols.push_back(solve_pih(basis, env, h, 0.25, net));
  const TabularPolicy pi = assemble_exploration_policy(sols, env);
  std::set<int> visited;
  for (int e = 0; e < 10000; ++e) {
    for (const auto& step : mdp::sample_episode(env, pi, 0, rng).steps) visited.insert(step.state);
  }
  EXPECT_GE(static_cast<double>(visited.size()), 0.9 * 25);
}

TEST(DesignFromSamples, DegenerateDesignHasZeroZeta) {
  Matrix psi = Matrix::Zero(10, 2);
  psi.col(0).setOnes();
  const DesignDiagnostics diag = design_from_samples(psi, build_x_net(2, 8, 1));
  EXPECT_EQ(diag.zeta_hat, 0.0);
}

TEST(DesignFromSamples, FourSignedAxesGiveInverseSqrtTwo) {
  Matrix psi(4, 2);
  psi << 1, 0, -1, 0, 0, 1, 0, -1;
  const DesignDiagnostics diag = design_from_samples(psi, build_x_net(2, 8, 1));
  EXPECT_NEAR(diag.zeta_hat, 1.0 / kSqrt2, 1e-12);
  EXPECT_NEAR(diag.xi_hat, 1.0, 1e-12);
  EXPECT_LE((diag.cov_psi - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(MeasureDesign, CovarianceIsSymmetricPsd) {
  const LinearMdp env = mdp::gen_experiment1({6, 6, 2, 10, 4, 3}, 2);
  Engine rng(5);
  const auto diags = measure_design(env, TabularPolicy::uniform(10, 4, 3), 500,
                                    build_x_net(6, default_x_net_size(6), 1), rng);
  ASSERT_EQ(diags.size(), 3u);
  for (const auto& diag : diags) {
    EXPECT_LE((diag.cov_psi - diag.cov_psi.transpose()).norm(), 1e-15);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(diag.cov_psi);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    EXPECT_GE(diag.zeta_hat, 0.0);
  }
}

}  // namespace
}  // namespace mtrl::design
