#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtrl/linalg.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::mdp {

using linalg::Matrix;
using linalg::Vector;

/// Per-step reward tables, one S x A matrix per step.
struct RewardTable {
  std::vector<Matrix> per_step;

  static RewardTable zeros(int n_states, int n_actions, int horizon);
  int horizon() const { return static_cast<int>(per_step.size()); }
};

/// Per-step stochastic policy pi_h(a|s); rows are distributions over actions.
class TabularPolicy {
 public:
  /// Validates shapes and row-stochasticity (1e-9); throws InvariantError.
  explicit TabularPolicy(std::vector<Matrix> per_step);

  static TabularPolicy uniform(int n_states, int n_actions, int horizon);
  /// actions[h][s] is the action taken at (h, s).
  static TabularPolicy deterministic(const std::vector<std::vector<int>>& actions,
                                     int n_actions);

  int horizon() const { return static_cast<int>(per_step_.size()); }
  int n_states() const { return static_cast<int>(per_step_.front().rows()); }
  int n_actions() const { return static_cast<int>(per_step_.front().cols()); }
  const Matrix& step(int h) const { return per_step_.at(h); }
  double prob(int h, int s, int a) const { return per_step_[h](s, a); }

 private:
  std::vector<Matrix> per_step_;
};

struct Step {
  int h = 0;
  int state = 0;
  int action = 0;
  Vector psi;
  double reward = 0.0;
};

struct Trajectory {
  int task = 0;
  std::vector<Step> steps;
};

/// Raw environment fields. Pair (s, a) lives in row s * n_actions + a of the
/// feature tables. b_star / w_star may be left empty, in which case the
/// factorization is derived from a reduced SVD of theta_star.
struct LinearMdpParts {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  int n_tasks = 0;
  int feature_dim = 0;
  Matrix psi;                       // (S*A) x d
  Matrix phi;                       // (S*A) x d
  std::vector<Matrix> mu;           // per step: d x S
  std::vector<Matrix> theta_star;   // per step: T x d
  std::vector<Matrix> b_star;       // per step: d x r (optional)
  std::vector<Matrix> w_star;       // per step: r x T (optional)
  Vector initial_dist;              // S
  std::optional<int> grid_side;     // set for grid mazes; enables state metric
};

/// Finite episodic linear MDP shared by T tasks that differ only in their
/// rewards R_ht(s, a) = <theta*_ht, psi(s, a)>. Immutable after construction.
///
/// The transition kernel is materialized per step as an (S*A) x S matrix
/// equal to phi * mu_h. When that product is not a valid kernel, each
/// offending row is shifted by its minimum and renormalized, and
/// kernel_projected() reports it.
class LinearMdp {
 public:
  explicit LinearMdp(LinearMdpParts parts);

  int n_states() const { return parts_.n_states; }
  int n_actions() const { return parts_.n_actions; }
  int horizon() const { return parts_.horizon; }
  int n_tasks() const { return parts_.n_tasks; }
  int feature_dim() const { return parts_.feature_dim; }
  int n_pairs() const { return parts_.n_states * parts_.n_actions; }
  int pair_index(int s, int a) const { return s * parts_.n_actions + a; }

  const LinearMdpParts& parts() const { return parts_; }
  const Matrix& psi_table() const { return parts_.psi; }
  const Matrix& phi_table() const { return parts_.phi; }
  auto psi(int s, int a) const { return parts_.psi.row(pair_index(s, a)); }
  auto phi(int s, int a) const { return parts_.phi.row(pair_index(s, a)); }
  const Matrix& mu(int h) const { return parts_.mu.at(h); }
  const Matrix& kernel(int h) const { return kernels_.at(h); }
  const Vector& initial_dist() const { return parts_.initial_dist; }
  const Matrix& theta_star(int h) const { return parts_.theta_star.at(h); }
  const Matrix& b_star(int h) const { return parts_.b_star.at(h); }
  const Matrix& w_star(int h) const { return parts_.w_star.at(h); }
  /// (S*A) x T table of true rewards at step h.
  const Matrix& reward_table(int h) const { return reward_tables_.at(h); }

  /// Numerical rank of Theta*_h.
  int rank(int h) const { return ranks_.at(h); }
  linalg::SingularRange theta_singular_range(int h) const;
  /// Top-r left singular basis of Theta*_h^T (the leading r directions of B*_h).
  linalg::OrthonormalBasis top_basis(int h, int r) const;
  /// rank(Theta*_h) <= min(T, d) / 2 at every step.
  bool satisfies_low_rank_assumption() const;
  bool kernel_projected() const { return kernel_projected_; }

  /// P_h(. | s, a); throws DimensionError on bad indices.
  Vector transition_dist(int s, int a, int h) const;
  /// <theta*_ht, psi(s, a)>; throws DimensionError on bad indices.
  double reward(int s, int a, int h, int t) const;
  /// R_t as per-step S x A tables.
  RewardTable task_rewards(int t) const;

  /// Manhattan distance between cells for grid mazes, nullopt otherwise.
  std::optional<int> state_distance(int s1, int s2) const;

 private:
  void check_indices(int s, int a, int h) const;

  LinearMdpParts parts_;
  std::vector<Matrix> kernels_;
  std::vector<Matrix> reward_tables_;
  std::vector<int> ranks_;
  bool kernel_projected_ = false;
};

/// Same inner product every reward path uses, so rewards recomputed offline
/// match the ones produced during simulation bit for bit.
double linear_reward(const Eigen::Ref<const Eigen::RowVectorXd>& theta,
                     const Eigen::Ref<const Eigen::RowVectorXd>& psi);

/// Samples an index from a probability row by inverse CDF.
int sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs,
                       Engine& rng);

Trajectory sample_episode(const LinearMdp& env, const TabularPolicy& policy,
                          int task, Engine& rng);
Trajectory sample_episode(const LinearMdp& env, const TabularPolicy& policy,
                          int task, std::uint64_t seed);

/// Transition-only access to an environment. Exploration code that must stay
/// reward-free takes this view instead of the LinearMdp.
class RewardFreeView {
 public:
  explicit RewardFreeView(const LinearMdp& env) : env_(&env) {}

  int n_states() const { return env_->n_states(); }
  int n_actions() const { return env_->n_actions(); }
  int horizon() const { return env_->horizon(); }
  int n_tasks() const { return env_->n_tasks(); }
  const Vector& initial_dist() const { return env_->initial_dist(); }

  int sample_initial(Engine& rng) const;
  int sample_next(int s, int a, int h, Engine& rng) const;

 private:
  const LinearMdp* env_;
};

struct Experiment1Params {
  int d = 20;
  int T = 20;
  int r = 2;
  int S = 100;
  int A = 6;
  int H = 5;
};

/// Synthetic environment with a shared rank-r reward subspace. Half of each
/// state's actions (floor(A/2), chosen at random) get a Gaussian embedding,
/// the rest the degenerate embedding e_1.
LinearMdp gen_experiment1(const Experiment1Params& params, std::uint64_t seed);

struct GridMazeParams {
  int side = 5;
  /// 1-based (row, col) goal cells, one per task.
  std::vector<std::pair<int, int>> goals;
  int H = 10;
};

/// Deterministic grid maze with canonical features and distance-based rewards.
/// Actions are up, down, left, right; moves into a wall keep the position.
LinearMdp gen_gridmaze(const GridMazeParams& params);

/// Cell index of 1-based (row, col) in a grid of the given side.
int grid_cell(int side, int row, int col);

}  // namespace mtrl::mdp
