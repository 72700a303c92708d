#pragma once

#include <cstdint>
#include <vector>

#include "mtrl/linear_mdp.hpp"
#include "mtrl/lowrank.hpp"
#include "mtrl/planner.hpp"

namespace mtrl::harness {

using linalg::Matrix;
using linalg::Vector;
using mdp::LinearMdp;
using mdp::RewardTable;
using mdp::TabularPolicy;

/// R_hat_t(s, a) = <theta_hat_ht, psi(s, a)> clipped to [0, 1].
RewardTable estimated_rewards(const lowrank::FactoredEstimate& estimate, const LinearMdp& env,
                              int t);

/// Greedy policy per task on the estimated rewards, planned on the stage-1
/// model or, with plan_on_true_model, on the true kernel.
std::vector<TabularPolicy> construct_policies(const lowrank::FactoredEstimate& estimate,
                                              const LinearMdp& env,
                                              const planner::EmpiricalModel& model,
                                              bool plan_on_true_model = false);

/// Optimal first-step values V*_t averaged over the initial distribution.
Vector optimal_values(const LinearMdp& env);

/// N * sum_t (V*_t - V^{pi_t}_t) with exact values; negatives above -1e-9 are
/// clipped to zero.
double compute_regret(const LinearMdp& env, const std::vector<TabularPolicy>& policies,
                      std::int64_t N, const Vector* v_star = nullptr);

/// Literal form: N episodes per task with s_1 drawn from the initial
/// distribution, summing V*_t(s_1) - V^{pi_t}_t(s_1).
double sampled_regret(const LinearMdp& env, const std::vector<TabularPolicy>& policies,
                      std::int64_t N, Engine& rng);

struct ValueGapReport {
  double err = 0.0;         // max_{h,t} ||theta_hat_ht - theta*_ht||
  int violations = 0;       // (t, h, s) cells exceeding either bound
  double worst_ratio = 0.0; // max gap / (Err (H - h)) over cells, zero-based h
};

/// Value-gap bounds with Pi_hat* planned on the true kernel under estimated
/// rewards: |V* - V_hat| and |V_hat - V| at every (t, h, s) are at most
/// Err (H - h) (zero-based h).
ValueGapReport check_value_gap(const LinearMdp& env, const lowrank::FactoredEstimate& estimate);

struct BoundReport {
  double delta = 0.0;      // max_h SD(B_hat_h, B*_h)
  bool qualifies = false;  // delta <= 0.1
  double measured = 0.0;
  double bound = 0.0;
  bool holds = true;       // vacuously true when not qualifying
};

inline constexpr double kDeltaCap = 0.1;

/// max_{h,t} ||theta_hat - theta*|| <= 1.12 delta sqrt(d) whenever delta <= 0.1.
BoundReport check_estimation_bound(const lowrank::FactoredEstimate& estimate, int d);

/// regret <= 2.5 N T H sqrt(d) delta whenever delta <= 0.1.
BoundReport check_regret_bound(double regret, double delta, std::int64_t N, int T, int H, int d);

}  // namespace mtrl::harness
