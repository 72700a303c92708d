#pragma once

#include <cstdint>
#include <vector>

#include "mtrl/linear_mdp.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::planner {

using linalg::Matrix;
using linalg::Vector;
using mdp::LinearMdp;
using mdp::RewardTable;
using mdp::TabularPolicy;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Count-based transition estimate. Pair (s, a) is row s * A + a of every
/// per-step table. Rows never visited fall back to the uniform distribution.
class EmpiricalModel {
 public:
  EmpiricalModel(int n_states, int n_actions, int horizon);
  /// Rebuilds a model from stored transition counts (one (S*A) x S table per step).
  static EmpiricalModel from_counts(int n_states, int n_actions,
                                    std::vector<CountMatrix> transition_counts,
                                    std::int64_t episodes_used);

  void record(int h, int s, int a, int s_next);
  void add_episode() { ++episodes_used_; }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int horizon() const { return static_cast<int>(phat_.size()); }
  int pair_index(int s, int a) const { return s * n_actions_ + a; }

  std::int64_t visits(int h, int s, int a) const;
  const CountMatrix& transition_counts(int h) const { return counts_.at(h); }
  /// (S*A) x S estimated kernel at step h.
  const Matrix& kernel(int h) const { return phat_.at(h); }
  bool unvisited(int h, int s, int a) const { return visits(h, s, a) == 0; }
  /// Number of (h, s, a) cells relying on the uniform fallback.
  int n_unvisited() const;
  std::int64_t episodes_used() const { return episodes_used_; }

 private:
  void refresh_row(int h, int pair);

  int n_states_;
  int n_actions_;
  std::vector<CountMatrix> counts_;
  std::vector<std::vector<std::int64_t>> visits_;
  std::vector<Matrix> phat_;
  std::int64_t episodes_used_ = 0;
};

/// V[h] is an S-vector, Q[h] an S x A matrix, for h = 0 .. H-1.
struct ValueTable {
  std::vector<Vector> V;
  std::vector<Matrix> Q;

  /// Expected first-step value under a distribution over initial states.
  double initial_value(const Vector& initial_dist) const;
};

struct PlanResult {
  TabularPolicy policy;
  ValueTable values;
};

/// Backward induction with greedy deterministic actions; ties go to the lowest
/// action index.
PlanResult plan(const EmpiricalModel& model, const RewardTable& rewards);
PlanResult plan(const LinearMdp& env, const RewardTable& rewards);

/// Exact evaluation of a stochastic policy by backward recursion.
ValueTable evaluate_policy(const EmpiricalModel& model, const TabularPolicy& policy,
                           const RewardTable& rewards);
ValueTable evaluate_policy(const LinearMdp& env, const TabularPolicy& policy,
                           const RewardTable& rewards);

struct ExploreOptions {
  /// Episodes rolled out between count-bonus replans; 0 means S * A.
  int batch_episodes = 0;
};

/// Default stage-1 budget: 50 * S * A * H episodes.
std::int64_t default_reward_free_budget(int n_states, int n_actions, int horizon);

/// Count-bonus exploration: each round plans on the current estimate with
/// pseudo-reward 1 / sqrt(max(1, count(h, s, a))) and rolls out a batch.
/// The view exposes transitions only.
EmpiricalModel reward_free_explore(const mdp::RewardFreeView& env,
                                   std::int64_t n_episodes, Engine& rng,
                                   const ExploreOptions& options = {});

}  // namespace mtrl::planner
