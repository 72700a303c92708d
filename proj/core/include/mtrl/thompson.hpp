#pragma once

#include <cstdint>
#include <vector>

#include "mtrl/linear_mdp.hpp"
#include "mtrl/planner.hpp"

namespace mtrl::thompson {

using linalg::Matrix;
using linalg::Vector;

struct ThompsonOptions {
  double prior_var = 1.0;
  /// Noise scale assumed by the posterior update.
  double noise_sd = 0.1;
  /// Standard deviation of noise added to the observed rewards (0: noiseless).
  double observation_noise_sd = 0.0;
  /// Plan the sampled rewards on the true kernel instead of the stage-1 model.
  bool plan_on_true_model = false;
};

/// Bayesian linear regression for one (task, step) with prior N(0, prior_var I).
class LinearPosterior {
 public:
  LinearPosterior(int dim, double prior_var, double noise_sd);

  void update(const Vector& psi, double y);
  Vector mean() const;
  Vector sample(Engine& rng) const;

 private:
  Matrix precision_;
  Vector b_;
  double noise_var_;
};

struct Checkpoint {
  int K = 0;
  /// Posterior means per step, T x d.
  std::vector<Matrix> theta_mean;
  /// sum over episodes n <= K and tasks t of V*_t - V^{pi_n}_t (exact values).
  double gap_sum = 0.0;
};

/// Runs every task independently for max(checkpoints) episodes. Each episode
/// samples rewards from the posteriors, clips them to [0, 1], plans, executes
/// once on the environment and updates the posteriors. Checkpoints must be
/// ascending.
std::vector<Checkpoint> run_thompson(const mdp::LinearMdp& env,
                                     const planner::EmpiricalModel& model,
                                     const std::vector<int>& checkpoints, std::uint64_t seed,
                                     const ThompsonOptions& options = {});

}  // namespace mtrl::thompson
