#include <benchmark/benchmark.h>

#include "mtrl/explore_design.hpp"
#include "mtrl/harness.hpp"
#include "mtrl/linalg.hpp"
#include "mtrl/linear_mdp.hpp"
#include "mtrl/lowrank.hpp"
#include "mtrl/planner.hpp"
#include "mtrl/rng.hpp"
#include "mtrl/simplex.hpp"

namespace {

using mtrl::linalg::Matrix;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  mtrl::Engine rng(seed);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = mtrl::standard_normal(rng);
  }
  return m;
}

const mtrl::mdp::LinearMdp& desk_env() {
  static const auto env = mtrl::mdp::gen_experiment1({}, 7);
  return env;
}

void BM_GenExperiment1(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::mdp::gen_experiment1({}, 11));
  }
}
BENCHMARK(BM_GenExperiment1)->Unit(benchmark::kMillisecond);

void BM_PlanTrueModel(benchmark::State& state) {
  const auto& env = desk_env();
  const auto rewards = env.task_rewards(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::planner::plan(env, rewards));
  }
}
BENCHMARK(BM_PlanTrueModel)->Unit(benchmark::kMicrosecond);

void BM_PlanEmpiricalModel(benchmark::State& state) {
  const auto& env = desk_env();
  mtrl::Engine rng(3);
  const auto model =
      mtrl::planner::reward_free_explore(mtrl::mdp::RewardFreeView(env), 2000, rng);
  const auto rewards = env.task_rewards(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::planner::plan(model, rewards));
  }
}
BENCHMARK(BM_PlanEmpiricalModel)->Unit(benchmark::kMicrosecond);

void BM_ReducedSvd(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Matrix m = random_matrix(d, d, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::linalg::reduced_svd(m, 2));
  }
}
BENCHMARK(BM_ReducedSvd)->Arg(20)->Arg(100);

void BM_DenseSimplex(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix a = random_matrix(n, n, 9).cwiseAbs();
  for (auto _ : state) {
    mtrl::lp::DenseSimplex lp(n);
    lp.set_objective(mtrl::linalg::Vector::Ones(n));
    for (int i = 0; i < n; ++i) lp.add_row(a.row(i).transpose(), mtrl::lp::Sense::kLessEqual, 1.0);
    benchmark::DoNotOptimize(lp.solve());
  }
}
BENCHMARK(BM_DenseSimplex)->Arg(20)->Arg(80);

void BM_EstimateDesk(benchmark::State& state) {
  const auto& env = desk_env();
  const int K = static_cast<int>(state.range(0));
  const auto policy = mtrl::mdp::TabularPolicy::uniform(env.n_states(), env.n_actions(),
                                                        env.horizon());
  const auto batch = mtrl::lowrank::collect_reward_samples(env, policy, K, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::lowrank::estimate(batch, 2, &env));
  }
}
BENCHMARK(BM_EstimateDesk)->Arg(200)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_Regret(benchmark::State& state) {
  const auto& env = desk_env();
  std::vector<mtrl::mdp::TabularPolicy> policies(
      env.n_tasks(),
      mtrl::mdp::TabularPolicy::uniform(env.n_states(), env.n_actions(), env.horizon()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mtrl::harness::compute_regret(env, policies, 100));
  }
}
BENCHMARK(BM_Regret)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
