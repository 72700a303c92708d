#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mtrl/linalg.hpp"
#include "mtrl/linear_mdp.hpp"

namespace mtrl::lowrank {

using linalg::Matrix;
using linalg::OrthonormalBasis;
using linalg::Vector;
using mdp::LinearMdp;
using mdp::TabularPolicy;

/// Stage-3 observations: psi[h][t] is K x d, y[h][t] has K entries. Row k of
/// every (h, t) block comes from episode k of task t.
struct SampleBatch {
  int K = 0;
  std::vector<std::vector<Matrix>> psi;
  std::vector<std::vector<Vector>> y;

  int horizon() const { return static_cast<int>(psi.size()); }
  int n_tasks() const { return psi.empty() ? 0 : static_cast<int>(psi.front().size()); }
  int dim() const;
  /// First k episodes of every task.
  SampleBatch prefix(int k) const;
};

struct CollectOptions {
  /// Standard deviation of additive Gaussian observation noise; 0 keeps the
  /// in-model deterministic rewards.
  double noise_sd = 0.0;
};

/// K episodes per task under the same policy; task t uses its own stream so a
/// batch of size K is a prefix of any larger batch with the same seed.
SampleBatch collect_reward_samples(const LinearMdp& env, const TabularPolicy& policy, int K,
                                   std::uint64_t seed, const CollectOptions& options = {});

struct SpectralInit {
  Matrix theta0_hat;  // d x T; column t is Psi_ht^T Y_ht / K
  OrthonormalBasis B_hat;
  Vector singular_values;
  bool deficient_init = false;
};

SpectralInit spectral_init(const SampleBatch& batch, int h, int r);

struct Refinement {
  Matrix W_hat;      // r x T
  Matrix Theta_hat;  // T x d
  std::vector<char> rank_deficient;  // per task
};

/// w_t = (Psi_ht B)^+ Y_ht and theta_t = B w_t for every task.
Refinement refine_weights(const SampleBatch& batch, int h, const OrthonormalBasis& B_hat);

struct StepEstimate {
  OrthonormalBasis B_hat = OrthonormalBasis::empty(0);
  Matrix W_hat;
  Matrix Theta_hat;
  Matrix theta0_hat;
  Vector singular_values;
  bool deficient_init = false;
  std::vector<char> rank_deficient;
  std::optional<double> sd_to_truth;
  /// ||theta_hat_t - theta*_t|| per task, when the truth is known.
  Vector task_errors;
  std::optional<double> rel_frobenius_error;
};

struct FactoredEstimate {
  int r = 0;
  std::vector<StepEstimate> steps;

  /// Largest subspace distance over steps (requires truth).
  double max_sd() const;
  /// Largest per-task error over steps and tasks (requires truth).
  double max_task_error() const;
};

/// Spectral initialization followed by least squares at every step. With a
/// truth environment, distances are measured against the top-r basis of
/// Theta*_h and errors against Theta*_h itself.
FactoredEstimate estimate(const SampleBatch& batch, int r, const LinearMdp* truth = nullptr);

/// Basis from the top-r eigenvectors of (1/KT) sum y^2 psi psi^T, then the same
/// least-squares refinement.
FactoredEstimate mom_estimate(const SampleBatch& batch, int r,
                              const LinearMdp* truth = nullptr);

/// (1/KT) sum_{k,t} y_tk^2 psi_tk psi_tk^T at step h.
Matrix mom_matrix(const SampleBatch& batch, int h);

/// ||Theta_hat - Theta*||_F / ||Theta*||_F.
double rel_frobenius_error(const Matrix& theta_hat, const Matrix& theta_star);

/// Squared-loss cost sum_t ||Y_ht - Psi_ht B w_t||^2 at step h.
double factored_cost(const SampleBatch& batch, int h, const Matrix& B, const Matrix& W);

}  // namespace mtrl::lowrank
