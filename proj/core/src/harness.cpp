#include "mtrl/harness.hpp"

#include <algorithm>
#include <cmath>

#include "mtrl/errors.hpp"

namespace mtrl::harness {

namespace {

using linalg::Index;

constexpr double kNegativeRegretTol = 1e-9;
constexpr double kBoundSlack = 1e-9;

}  // namespace

RewardTable estimated_rewards(const lowrank::FactoredEstimate& estimate, const LinearMdp& env,
                              int t) {
  const int S = env.n_states();
  const int A = env.n_actions();
  if (static_cast<int>(estimate.steps.size()) != env.horizon()) {
    throw DimensionError("estimated_rewards: estimate does not cover every step");
  }
  RewardTable out = RewardTable::zeros(S, A, env.horizon());
  for (int h = 0; h < env.horizon(); ++h) {
    const Matrix& theta = estimate.steps[h].Theta_hat;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double r = mdp::linear_reward(theta.row(t), env.psi(s, a));
        out.per_step[h](s, a) = std::clamp(r, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<TabularPolicy> construct_policies(const lowrank::FactoredEstimate& estimate,
                                              const LinearMdp& env,
                                              const planner::EmpiricalModel& model,
                                              bool plan_on_true_model) {
  std::vector<TabularPolicy> out;
  out.reserve(env.n_tasks());
  for (int t = 0; t < env.n_tasks(); ++t) {
    const RewardTable r = estimated_rewards(estimate, env, t);
    out.push_back(plan_on_true_model ? planner::plan(env, r).policy
                                     : planner::plan(model, r).policy);
  }
  return out;
}

Vector optimal_values(const LinearMdp& env) {
  Vector out(env.n_tasks());
  for (int t = 0; t < env.n_tasks(); ++t) {
    out(t) = planner::plan(env, env.task_rewards(t)).values.initial_value(env.initial_dist());
  }
  return out;
}

double compute_regret(const LinearMdp& env, const std::vector<TabularPolicy>& policies,
                      std::int64_t N, const Vector* v_star) {
  if (static_cast<int>(policies.size()) != env.n_tasks()) {
    throw DimensionError("compute_regret: need one policy per task");
  }
  if (N < 0) throw ParameterError("compute_regret: N must be nonnegative");
  const Vector computed = v_star == nullptr ? optimal_values(env) : Vector();
  const Vector& star = v_star == nullptr ? computed : *v_star;
  double gap = 0.0;
  for (int t = 0; t < env.n_tasks(); ++t) {
    const double v = planner::evaluate_policy(env, policies[t], env.task_rewards(t))
                         .initial_value(env.initial_dist());
    gap += star(t) - v;
  }
  const double regret = static_cast<double>(N) * gap;
  if (regret < 0.0 && regret > -kNegativeRegretTol * std::max<double>(1.0, N)) return 0.0;
  return regret;
}

double sampled_regret(const LinearMdp& env, const std::vector<TabularPolicy>& policies,
                      std::int64_t N, Engine& rng) {
  if (static_cast<int>(policies.size()) != env.n_tasks()) {
    throw DimensionError("sampled_regret: need one policy per task");
  }
  double total = 0.0;
  for (int t = 0; t < env.n_tasks(); ++t) {
    const RewardTable truth = env.task_rewards(t);
    const Vector gap = planner::plan(env, truth).values.V.front() -
                       planner::evaluate_policy(env, policies[t], truth).V.front();
    for (std::int64_t n = 0; n < N; ++n) {
      total += gap(mdp::sample_categorical(env.initial_dist().transpose(), rng));
    }
  }
  return total;
}

ValueGapReport check_value_gap(const LinearMdp& env, const lowrank::FactoredEstimate& estimate) {
  ValueGapReport report;
  for (int h = 0; h < env.horizon(); ++h) {
    const Vector errs = (estimate.steps.at(h).Theta_hat - env.theta_star(h)).rowwise().norm();
    report.err = std::max(report.err, errs.maxCoeff());
  }
  const int H = env.horizon();
  for (int t = 0; t < env.n_tasks(); ++t) {
    const RewardTable truth = env.task_rewards(t);
    const RewardTable est = estimated_rewards(estimate, env, t);
    const planner::ValueTable v_star = planner::plan(env, truth).values;
    const planner::PlanResult hat = planner::plan(env, est);
    const planner::ValueTable v_pi = planner::evaluate_policy(env, hat.policy, truth);
    for (int h = 0; h < H; ++h) {
      const double bound = report.err * (H - h);
      for (int s = 0; s < env.n_states(); ++s) {
        const double g1 = std::abs(v_star.V[h](s) - hat.values.V[h](s));
        const double g2 = std::abs(hat.values.V[h](s) - v_pi.V[h](s));
        const double g = std::max(g1, g2);
        if (g > bound + kBoundSlack) ++report.violations;
        if (bound > 0.0) report.worst_ratio = std::max(report.worst_ratio, g / bound);
      }
    }
  }
  return report;
}

BoundReport check_estimation_bound(const lowrank::FactoredEstimate& estimate, int d) {
  BoundReport report;
  report.delta = estimate.max_sd();
  report.qualifies = report.delta <= kDeltaCap;
  report.measured = estimate.max_task_error();
  report.bound = 1.12 * report.delta * std::sqrt(static_cast<double>(d));
  report.holds = !report.qualifies || report.measured <= report.bound + kBoundSlack;
  return report;
}

BoundReport check_regret_bound(double regret, double delta, std::int64_t N, int T, int H, int d) {
  BoundReport report;
  report.delta = delta;
  report.qualifies = delta <= kDeltaCap;
  report.measured = regret;
  report.bound = 2.5 * static_cast<double>(N) * T * H * std::sqrt(static_cast<double>(d)) * delta;
  report.holds = !report.qualifies || regret <= report.bound + kBoundSlack;
  return report;
}

}  // namespace mtrl::harness
