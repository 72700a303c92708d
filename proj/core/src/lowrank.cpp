#include "mtrl/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtrl/errors.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::lowrank {

namespace {

using linalg::Index;

int numerical_rank(const Vector& s) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  int rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > linalg::kRankTol * s(0)) ++rank;
  }
  return rank;
}

void check_step(const SampleBatch& batch, int h) {
  if (h < 0 || h >= batch.horizon()) throw DimensionError("lowrank: step out of range");
  if (batch.K < 1) throw DimensionError("lowrank: batch needs K >= 1");
}

void attach_truth(StepEstimate& step, const LinearMdp& truth, int h, int r) {
  const Matrix& theta_star = truth.theta_star(h);
  if (theta_star.rows() != step.Theta_hat.rows() || theta_star.cols() != step.Theta_hat.cols()) {
    throw DimensionError("lowrank: truth shape does not match the estimate");
  }
  step.sd_to_truth = linalg::subspace_distance(step.B_hat, truth.top_basis(h, r));
  step.task_errors = (step.Theta_hat - theta_star).rowwise().norm();
  step.rel_frobenius_error = rel_frobenius_error(step.Theta_hat, theta_star);
}

template <typename InitFn>
FactoredEstimate estimate_with(const SampleBatch& batch, int r, const LinearMdp* truth,
                               InitFn init) {
  FactoredEstimate out;
  out.r = r;
  for (int h = 0; h < batch.horizon(); ++h) {
    SpectralInit si = init(h);
    Refinement ref = refine_weights(batch, h, si.B_hat);
    StepEstimate step{std::move(si.B_hat),
                      std::move(ref.W_hat),
                      std::move(ref.Theta_hat),
                      std::move(si.theta0_hat),
                      std::move(si.singular_values),
                      si.deficient_init,
                      std::move(ref.rank_deficient),
                      std::nullopt,
                      Vector(),
                      std::nullopt};
    if (truth != nullptr) attach_truth(step, *truth, h, r);
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace

int SampleBatch::dim() const {
  if (psi.empty() || psi.front().empty()) return 0;
  return static_cast<int>(psi.front().front().cols());
}

SampleBatch SampleBatch::prefix(int k) const {
  if (k < 1 || k > K) throw DimensionError("SampleBatch::prefix: k out of range");
  SampleBatch out;
  out.K = k;
  out.psi.resize(psi.size());
  out.y.resize(y.size());
  for (std::size_t h = 0; h < psi.size(); ++h) {
    for (std::size_t t = 0; t < psi[h].size(); ++t) {
      out.psi[h].push_back(psi[h][t].topRows(k));
      out.y[h].push_back(y[h][t].head(k));
    }
  }
  return out;
}

SampleBatch collect_reward_samples(const LinearMdp& env, const TabularPolicy& policy, int K,
                                   std::uint64_t seed, const CollectOptions& options) {
  if (K < 1) throw ParameterError("collect_reward_samples: K must be >= 1");
  if (options.noise_sd < 0.0) throw ParameterError("collect_reward_samples: noise_sd < 0");
  const int H = env.horizon();
  const int T = env.n_tasks();
  const int d = env.feature_dim();
  SampleBatch batch;
  batch.K = K;
  batch.psi.assign(H, std::vector<Matrix>(T, Matrix(K, d)));
  batch.y.assign(H, std::vector<Vector>(T, Vector(K)));
  for (int t = 0; t < T; ++t) {
    Engine rng = make_engine(seed, Stream::kRewardSamples, static_cast<std::uint64_t>(t));
    Engine noise = make_engine(seed, Stream::kObservationNoise, static_cast<std::uint64_t>(t));
    for (int k = 0; k < K; ++k) {
      const mdp::Trajectory traj = mdp::sample_episode(env, policy, t, rng);
      for (const mdp::Step& step : traj.steps) {
        batch.psi[step.h][t].row(k) = step.psi.transpose();
        double y = step.reward;
        if (options.noise_sd > 0.0) y += options.noise_sd * standard_normal(noise);
        batch.y[step.h][t](k) = y;
      }
    }
  }
  return batch;
}

SpectralInit spectral_init(const SampleBatch& batch, int h, int r) {
  check_step(batch, h);
  const int T = batch.n_tasks();
  const int d = batch.dim();
  if (r < 1 || r > std::min(T, d)) throw DimensionError("spectral_init: r out of range");
  SpectralInit out{Matrix(d, T), OrthonormalBasis::empty(d), Vector(), false};
  for (int t = 0; t < T; ++t) {
    out.theta0_hat.col(t) = batch.psi[h][t].transpose() * batch.y[h][t] /
                            static_cast<double>(batch.K);
  }
  out.singular_values = linalg::singular_values(out.theta0_hat);
  out.deficient_init = numerical_rank(out.singular_values) < r;
  out.B_hat = linalg::reduced_svd(out.theta0_hat, r).U;
  return out;
}

Refinement refine_weights(const SampleBatch& batch, int h, const OrthonormalBasis& B_hat) {
  check_step(batch, h);
  const int T = batch.n_tasks();
  if (B_hat.ambient_dim() != batch.dim()) throw DimensionError("refine_weights: basis dimension");
  const Matrix& B = B_hat.columns();
  Refinement out{Matrix(B.cols(), T), Matrix(T, B.rows()), std::vector<char>(T, 0)};
  for (int t = 0; t < T; ++t) {
    const linalg::PinvSolution sol = linalg::pinv_apply(batch.psi[h][t] * B, batch.y[h][t]);
    out.W_hat.col(t) = sol.x;
    out.rank_deficient[t] = sol.rank_deficient ? 1 : 0;
  }
  out.Theta_hat = (B * out.W_hat).transpose();
  return out;
}

double FactoredEstimate::max_sd() const {
  double worst = 0.0;
  for (const StepEstimate& s : steps) {
    if (!s.sd_to_truth) throw InvariantError("FactoredEstimate: truth not attached");
    worst = std::max(worst, *s.sd_to_truth);
  }
  return worst;
}

double FactoredEstimate::max_task_error() const {
  double worst = 0.0;
  for (const StepEstimate& s : steps) {
    if (s.task_errors.size() == 0) throw InvariantError("FactoredEstimate: truth not attached");
    worst = std::max(worst, s.task_errors.maxCoeff());
  }
  return worst;
}

FactoredEstimate estimate(const SampleBatch& batch, int r, const LinearMdp* truth) {
  return estimate_with(batch, r, truth, [&](int h) { return spectral_init(batch, h, r); });
}

Matrix mom_matrix(const SampleBatch& batch, int h) {
  check_step(batch, h);
  const int T = batch.n_tasks();
  const int d = batch.dim();
  Matrix m = Matrix::Zero(d, d);
  for (int t = 0; t < T; ++t) {
    const Matrix& psi = batch.psi[h][t];
    const Vector w = batch.y[h][t].array().square();
    m.noalias() += psi.transpose() * w.asDiagonal() * psi;
  }
  m /= static_cast<double>(batch.K) * T;
  return 0.5 * (m + m.transpose());
}

FactoredEstimate mom_estimate(const SampleBatch& batch, int r, const LinearMdp* truth) {
  return estimate_with(batch, r, truth, [&](int h) {
    const int T = batch.n_tasks();
    const int d = batch.dim();
    if (r < 1 || r > std::min(T, d)) throw DimensionError("mom_estimate: r out of range");
    const Matrix m = mom_matrix(batch, h);
    // Symmetric PSD, so the left singular vectors are the top eigenvectors.
    SpectralInit out{m, OrthonormalBasis::empty(d), linalg::singular_values(m), false};
    out.deficient_init = numerical_rank(out.singular_values) < r;
    out.B_hat = linalg::reduced_svd(m, r).U;
    return out;
  });
}

double rel_frobenius_error(const Matrix& theta_hat, const Matrix& theta_star) {
  if (theta_hat.rows() != theta_star.rows() || theta_hat.cols() != theta_star.cols()) {
    throw DimensionError("rel_frobenius_error: shape mismatch");
  }
  const double denom = theta_star.norm();
  if (denom == 0.0) return theta_hat.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (theta_hat - theta_star).norm() / denom;
}

double factored_cost(const SampleBatch& batch, int h, const Matrix& B, const Matrix& W) {
  check_step(batch, h);
  double cost = 0.0;
  for (int t = 0; t < batch.n_tasks(); ++t) {
    cost += (batch.y[h][t] - batch.psi[h][t] * (B * W.col(t))).squaredNorm();
  }
  return cost;
}

}  // namespace mtrl::lowrank
