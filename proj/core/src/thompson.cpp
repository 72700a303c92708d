#include "mtrl/thompson.hpp"

#include <algorithm>
#include <cmath>

#include "mtrl/errors.hpp"

namespace mtrl::thompson {

namespace {

using linalg::Index;

}  // namespace

LinearPosterior::LinearPosterior(int dim, double prior_var, double noise_sd)
    : precision_(Matrix::Identity(dim, dim) / prior_var),
      b_(Vector::Zero(dim)),
      noise_var_(noise_sd * noise_sd) {
  if (dim < 1 || !(prior_var > 0.0) || !(noise_sd > 0.0)) {
    throw ParameterError("LinearPosterior: dim, prior_var and noise_sd must be positive");
  }
}

void LinearPosterior::update(const Vector& psi, double y) {
  precision_.noalias() += psi * psi.transpose() / noise_var_;
  b_ += psi * (y / noise_var_);
}

Vector LinearPosterior::mean() const { return precision_.llt().solve(b_); }

Vector LinearPosterior::sample(Engine& rng) const {
  const Eigen::LLT<Matrix> llt(precision_);
  Vector z(b_.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  // Precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  return llt.solve(b_) + llt.matrixU().solve(z);
}

std::vector<Checkpoint> run_thompson(const mdp::LinearMdp& env,
                                     const planner::EmpiricalModel& model,
                                     const std::vector<int>& checkpoints, std::uint64_t seed,
                                     const ThompsonOptions& options) {
  if (checkpoints.empty() || checkpoints.front() < 1 ||
      !std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw ParameterError("run_thompson: checkpoints must be positive and ascending");
  }
  const int S = env.n_states();
  const int A = env.n_actions();
  const int H = env.horizon();
  const int T = env.n_tasks();
  const int d = env.feature_dim();
  const int K_max = checkpoints.back();

  std::vector<Checkpoint> out(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    out[c].K = checkpoints[c];
    out[c].theta_mean.assign(H, Matrix::Zero(T, d));
  }

  for (int t = 0; t < T; ++t) {
    const mdp::RewardTable truth = env.task_rewards(t);
    const double v_star = planner::plan(env, truth).values.initial_value(env.initial_dist());
    std::vector<LinearPosterior> post(H, LinearPosterior(d, options.prior_var, options.noise_sd));
    Engine rng = make_engine(seed, Stream::kThompson, static_cast<std::uint64_t>(t));
    Engine noise = make_engine(seed, Stream::kObservationNoise,
                               0x100000000ULL + static_cast<std::uint64_t>(t));
    double gap_sum = 0.0;
    std::size_t next = 0;
    for (int n = 1; n <= K_max; ++n) {
      mdp::RewardTable sampled = mdp::RewardTable::zeros(S, A, H);
      for (int h = 0; h < H; ++h) {
        const Vector theta = post[h].sample(rng);
        const Vector r = env.psi_table() * theta;
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            sampled.per_step[h](s, a) = std::clamp(r(env.pair_index(s, a)), 0.0, 1.0);
          }
        }
      }
      const mdp::TabularPolicy policy = options.plan_on_true_model
                                            ? planner::plan(env, sampled).policy
                                            : planner::plan(model, sampled).policy;
      const double v = planner::evaluate_policy(env, policy, truth).initial_value(env.initial_dist());
      gap_sum += std::max(0.0, v_star - v);

      const mdp::Trajectory traj = mdp::sample_episode(env, policy, t, rng);
      for (const mdp::Step& step : traj.steps) {
        double y = step.reward;
        if (options.observation_noise_sd > 0.0) {
          y += options.observation_noise_sd * standard_normal(noise);
        }
        post[step.h].update(step.psi, y);
      }

      while (next < checkpoints.size() && checkpoints[next] == n) {
        for (int h = 0; h < H; ++h) out[next].theta_mean[h].row(t) = post[h].mean().transpose();
        out[next].gap_sum += gap_sum;
        ++next;
      }
    }
  }
  return out;
}

}  // namespace mtrl::thompson
