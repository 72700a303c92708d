#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mtrl/linear_mdp.hpp"
#include "mtrl/planner.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::design {

using linalg::Matrix;
using linalg::Vector;
using mdp::LinearMdp;
using mdp::TabularPolicy;

/// Raised when some direction of phi-space cannot be reached at step h.
class CoverageUnattainable : public std::runtime_error {
 public:
  CoverageUnattainable(int h, Vector direction, const std::string& what)
      : std::runtime_error(what), h_(h), direction_(std::move(direction)) {}
  int h() const { return h_; }
  const Vector& direction() const { return direction_; }

 private:
  int h_;
  Vector direction_;
};

/// M sampled trajectories; sample m contributes (s_mh, a_mh, phi_mh) at every h.
struct FeatureBasis {
  int M = 0;
  int rounds = 0;
  std::vector<std::vector<int>> states;   // [h][m]
  std::vector<std::vector<int>> actions;  // [h][m]
  std::vector<Matrix> phi;                // [h]: M x d
  std::vector<Matrix> gram;               // [h]: sum_m phi phi^T

  int horizon() const { return static_cast<int>(gram.size()); }
  double lambda_min(int h) const;
};

struct CoverageOptions {
  int max_rounds = 10000;
  int batch_episodes = 20;
};

/// Rounds of batch_episodes episodes. Episode e of a round plans on the
/// stage-1 model with pseudo-reward <phi(s,a), v_h>^2 at every step h, where
/// v_h is the e-th (cyclically) eigenvector of G_h with eigenvalue below 1,
/// then rolls out on the environment's transitions. Rewards are never read.
/// Stops once lambda_min(G_h) >= 1 for every h; throws when the weakest
/// direction has no reachable feature.
FeatureBasis collect_feature_basis(const LinearMdp& env,
                                   const planner::EmpiricalModel& model, Engine& rng,
                                   const CoverageOptions& options = {});

/// Unit directions stored sparsely; structured points have one or two entries.
struct XNet {
  int dim = 0;
  std::vector<std::vector<std::pair<int, double>>> points;

  int size() const { return static_cast<int>(points.size()); }
  double dot(int k, const Eigen::Ref<const Eigen::RowVectorXd>& v) const;
  Vector dense(int k) const;
  static XNet from_dense(const Matrix& columns);
};

/// +-e_i, then +-(e_i + e_j)/sqrt(2), +-(e_i - e_j)/sqrt(2) for i < j (2 d^2
/// points in total), truncated to size or padded with seeded random unit
/// vectors.
XNet build_x_net(int d, int size, std::uint64_t seed);
int default_x_net_size(int d);

/// |<x, psi>| sqrt(d) - xi d <x, psi>^2 with d = dim(psi).
double eval_f(const Vector& psi, const Vector& x, double xi);

struct MinimaxSolution {
  int h = 0;
  /// S x A; rows of states outside `sampled` are uniform placeholders.
  Matrix pi;
  std::vector<char> sampled;
  Vector nu;  // empty for the first step
  double value = 0.0;
  int x_net_size = 0;
  int iterations = 0;
  bool converged = true;
  int lp_pivots = 0;
  int cuts = 0;
  /// Best value after each alternation (non-decreasing).
  std::vector<double> value_history;
};

/// First step: max over pi of min over the net of
/// (1/M) sum_m sum_a f(s_m1, a, x) pi(a | s_m1).
MinimaxSolution solve_pi1(const FeatureBasis& basis, const LinearMdp& env, double xi,
                          const XNet& net);

struct AlternationOptions {
  int n_alternations = 20;
  int nu_iterations = 200;
};

/// Later steps (h >= 1, zero-based): block-coordinate ascent over
/// (pi_h, nu) with nu in the unit ball and per-sample weights
/// phi_{m,h-1}^T G_{h-1}^{-1} nu.
MinimaxSolution solve_pih(const FeatureBasis& basis, const LinearMdp& env, int h,
                          double xi, const XNet& net,
                          const AlternationOptions& options = {});

/// Extends each step's policy to unsampled states by copying the nearest
/// sampled state under the environment metric, or uniform without a metric.
TabularPolicy assemble_exploration_policy(const std::vector<MinimaxSolution>& solutions,
                                          const LinearMdp& env);

struct DesignDiagnostics {
  int h = 0;
  double zeta_hat = 0.0;
  double xi_hat = 0.0;
  Matrix cov_psi;
};

/// zeta_hat = sqrt(d) min_x mean |<psi, x>|; cov_psi = mean psi psi^T;
/// xi_hat = 1 / sqrt(d lambda_max(cov_psi)).
DesignDiagnostics design_from_samples(const Matrix& psi_rows, const XNet& net);

/// Rolls out n_probe episodes and reports diagnostics per step.
std::vector<DesignDiagnostics> measure_design(const LinearMdp& env,
                                              const TabularPolicy& policy, int n_probe,
                                              const XNet& net, Engine& rng);

}  // namespace mtrl::design
