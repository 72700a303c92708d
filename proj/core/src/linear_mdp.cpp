#include "mtrl/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::mdp {

namespace {

using linalg::Index;

constexpr double kStochasticTol = 1e-9;
constexpr double kRangeTol = 1e-12;
constexpr double kFactorTol = 1e-10;

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvariantError("LinearMdp: " + msg);
}

bool is_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return row.minCoeff() >= 0.0 && std::abs(row.sum() - 1.0) <= kStochasticTol;
}

// Shift by the minimum (if negative) and renormalize; uniform if nothing is left.
Eigen::RowVectorXd project_row(const Eigen::RowVectorXd& v) {
  Eigen::RowVectorXd out = v;
  const double lo = out.minCoeff();
  if (lo < 0.0) out.array() -= lo;
  const double total = out.sum();
  if (!(total > 0.0)) {
    return Eigen::RowVectorXd::Constant(v.size(), 1.0 / static_cast<double>(v.size()));
  }
  return out / total;
}

int numerical_rank(const Matrix& m) {
  const Vector s = linalg::singular_values(m);
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  int rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > linalg::kRankTol * s(0)) ++rank;
  }
  return rank;
}

}  // namespace

RewardTable RewardTable::zeros(int n_states, int n_actions, int horizon) {
  RewardTable out;
  out.per_step.assign(horizon, Matrix::Zero(n_states, n_actions));
  return out;
}

TabularPolicy::TabularPolicy(std::vector<Matrix> per_step)
    : per_step_(std::move(per_step)) {
  if (per_step_.empty()) throw InvariantError("TabularPolicy: empty horizon");
  const auto rows = per_step_.front().rows();
  const auto cols = per_step_.front().cols();
  if (rows == 0 || cols == 0) throw InvariantError("TabularPolicy: empty step");
  for (const Matrix& m : per_step_) {
    if (m.rows() != rows || m.cols() != cols) {
      throw InvariantError("TabularPolicy: inconsistent step shapes");
    }
    for (Index s = 0; s < rows; ++s) {
      if (!m.row(s).allFinite() || !is_distribution(m.row(s))) {
        throw InvariantError("TabularPolicy: row is not a distribution");
      }
    }
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions, int horizon) {
  return TabularPolicy(std::vector<Matrix>(
      horizon, Matrix::Constant(n_states, n_actions, 1.0 / n_actions)));
}

TabularPolicy TabularPolicy::deterministic(
    const std::vector<std::vector<int>>& actions, int n_actions) {
  std::vector<Matrix> steps;
  steps.reserve(actions.size());
  for (const auto& row : actions) {
    Matrix m = Matrix::Zero(static_cast<Index>(row.size()), n_actions);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] < 0 || row[s] >= n_actions) {
        throw DimensionError("TabularPolicy::deterministic: action out of range");
      }
      m(static_cast<Index>(s), row[s]) = 1.0;
    }
    steps.push_back(std::move(m));
  }
  return TabularPolicy(std::move(steps));
}

double linear_reward(const Eigen::Ref<const Eigen::RowVectorXd>& theta,
                     const Eigen::Ref<const Eigen::RowVectorXd>& psi) {
  double acc = 0.0;
  for (Index i = 0; i < theta.size(); ++i) acc += theta(i) * psi(i);
  return acc;
}

LinearMdp::LinearMdp(LinearMdpParts parts) : parts_(std::move(parts)) {
  const int S = parts_.n_states;
  const int A = parts_.n_actions;
  const int H = parts_.horizon;
  const int T = parts_.n_tasks;
  const int d = parts_.feature_dim;
  require(S > 0 && A > 0 && H > 0 && T > 0 && d > 0, "counts must be positive");
  const Index pairs = static_cast<Index>(S) * A;

  require(parts_.psi.rows() == pairs && parts_.psi.cols() == d, "psi shape");
  require(parts_.phi.rows() == pairs && parts_.phi.cols() == d, "phi shape");
  require(parts_.psi.allFinite() && parts_.phi.allFinite(), "non-finite features");
  for (Index i = 0; i < pairs; ++i) {
    require(parts_.psi.row(i).norm() <= 1.0 + kRangeTol, "||psi(s,a)||_2 > 1");
    require(parts_.phi.row(i).lpNorm<1>() <= 1.0 + kRangeTol, "||phi(s,a)||_1 > 1");
  }

  require(parts_.initial_dist.size() == S &&
              is_distribution(parts_.initial_dist.transpose()),
          "initial_dist is not a distribution");

  require(static_cast<int>(parts_.mu.size()) == H, "mu needs one matrix per step");
  require(static_cast<int>(parts_.theta_star.size()) == H,
          "theta_star needs one matrix per step");
  const bool has_factors = !parts_.b_star.empty();
  if (has_factors) {
    require(static_cast<int>(parts_.b_star.size()) == H &&
                static_cast<int>(parts_.w_star.size()) == H,
            "b_star and w_star need one matrix per step");
  } else {
    require(parts_.w_star.empty(), "w_star given without b_star");
  }

  const double theta_cap = std::sqrt(static_cast<double>(d)) + kRangeTol;
  kernels_.reserve(H);
  reward_tables_.reserve(H);
  ranks_.reserve(H);
  for (int h = 0; h < H; ++h) {
    const Matrix& mu = parts_.mu[h];
    require(mu.rows() == d && mu.cols() == S && mu.allFinite(), "mu shape");
    Matrix kernel = parts_.phi * mu;
    for (Index i = 0; i < pairs; ++i) {
      if (!is_distribution(kernel.row(i))) {
        kernel.row(i) = project_row(kernel.row(i));
        kernel_projected_ = true;
      }
    }
    kernels_.push_back(std::move(kernel));

    const Matrix& theta = parts_.theta_star[h];
    require(theta.rows() == T && theta.cols() == d && theta.allFinite(),
            "theta_star shape");
    for (int t = 0; t < T; ++t) {
      require(theta.row(t).norm() <= theta_cap, "||theta*_ht|| > sqrt(d)");
    }
    Matrix rewards(pairs, T);
    for (Index i = 0; i < pairs; ++i) {
      for (int t = 0; t < T; ++t) {
        const double r = linear_reward(theta.row(t), parts_.psi.row(i));
        require(r >= -kRangeTol && r <= 1.0 + kRangeTol, "reward outside [0, 1]");
        rewards(i, t) = r;
      }
    }
    reward_tables_.push_back(std::move(rewards));

    const int rank = numerical_rank(theta);
    ranks_.push_back(rank);
    if (has_factors) {
      linalg::OrthonormalBasis check(parts_.b_star[h]);
      require(check.ambient_dim() == d, "b_star ambient dimension");
      require(parts_.w_star[h].rows() == check.rank() && parts_.w_star[h].cols() == T,
              "w_star shape");
      const Matrix diff = parts_.b_star[h] * parts_.w_star[h] - theta.transpose();
      require(diff.cwiseAbs().maxCoeff() <= kFactorTol,
              "theta_star^T != b_star * w_star");
    } else {
      const auto svd = linalg::reduced_svd(theta.transpose(), rank);
      parts_.b_star.push_back(svd.U.columns());
      parts_.w_star.push_back(svd.S.asDiagonal() * svd.V.columns().transpose());
    }
  }
  if (parts_.grid_side) {
    require(*parts_.grid_side * *parts_.grid_side == S, "grid_side^2 != n_states");
  }
}

linalg::SingularRange LinearMdp::theta_singular_range(int h) const {
  return linalg::extreme_singular_values(theta_star(h));
}

linalg::OrthonormalBasis LinearMdp::top_basis(int h, int r) const {
  return linalg::reduced_svd(theta_star(h).transpose(), r).U;
}

bool LinearMdp::satisfies_low_rank_assumption() const {
  const int cap = std::min(n_tasks(), feature_dim());
  return std::all_of(ranks_.begin(), ranks_.end(),
                     [cap](int r) { return 2 * r <= cap; });
}

void LinearMdp::check_indices(int s, int a, int h) const {
  if (s < 0 || s >= n_states() || a < 0 || a >= n_actions() || h < 0 ||
      h >= horizon()) {
    throw DimensionError("LinearMdp: state, action or step out of range");
  }
}

Vector LinearMdp::transition_dist(int s, int a, int h) const {
  check_indices(s, a, h);
  return kernels_[h].row(pair_index(s, a)).transpose();
}

double LinearMdp::reward(int s, int a, int h, int t) const {
  check_indices(s, a, h);
  if (t < 0 || t >= n_tasks()) throw DimensionError("LinearMdp: task out of range");
  return reward_tables_[h](pair_index(s, a), t);
}

RewardTable LinearMdp::task_rewards(int t) const {
  if (t < 0 || t >= n_tasks()) throw DimensionError("LinearMdp: task out of range");
  RewardTable out;
  out.per_step.reserve(horizon());
  for (int h = 0; h < horizon(); ++h) {
    Matrix m(n_states(), n_actions());
    for (int s = 0; s < n_states(); ++s) {
      for (int a = 0; a < n_actions(); ++a) {
        m(s, a) = reward_tables_[h](pair_index(s, a), t);
      }
    }
    out.per_step.push_back(std::move(m));
  }
  return out;
}

std::optional<int> LinearMdp::state_distance(int s1, int s2) const {
  if (!parts_.grid_side) return std::nullopt;
  const int side = *parts_.grid_side;
  return std::abs(s1 / side - s2 / side) + std::abs(s1 % side - s2 % side);
}

int sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs,
                       Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const Index n = probs.size();
  for (Index i = 0; i < n; ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the cumulative sum; return the last positive entry.
  for (Index i = n - 1; i >= 0; --i) {
    if (probs(i) > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

Trajectory sample_episode(const LinearMdp& env, const TabularPolicy& policy,
                          int task, Engine& rng) {
  if (policy.horizon() != env.horizon() || policy.n_states() != env.n_states() ||
      policy.n_actions() != env.n_actions()) {
    throw DimensionError("sample_episode: policy shape does not match env");
  }
  if (task < 0 || task >= env.n_tasks()) {
    throw DimensionError("sample_episode: task out of range");
  }
  Trajectory traj;
  traj.task = task;
  traj.steps.reserve(env.horizon());
  int s = sample_categorical(env.initial_dist().transpose(), rng);
  for (int h = 0; h < env.horizon(); ++h) {
    const int a = sample_categorical(policy.step(h).row(s), rng);
    Step step;
    step.h = h;
    step.state = s;
    step.action = a;
    step.psi = env.psi(s, a).transpose();
    step.reward = env.reward(s, a, h, task);
    traj.steps.push_back(std::move(step));
    if (h + 1 < env.horizon()) {
      s = sample_categorical(env.kernel(h).row(env.pair_index(s, a)), rng);
    }
  }
  return traj;
}

Trajectory sample_episode(const LinearMdp& env, const TabularPolicy& policy,
                          int task, std::uint64_t seed) {
  Engine rng(seed);
  return sample_episode(env, policy, task, rng);
}

int RewardFreeView::sample_initial(Engine& rng) const {
  return sample_categorical(env_->initial_dist().transpose(), rng);
}

int RewardFreeView::sample_next(int s, int a, int h, Engine& rng) const {
  if (s < 0 || s >= n_states() || a < 0 || a >= n_actions() || h < 0 ||
      h >= horizon()) {
    throw DimensionError("RewardFreeView: state, action or step out of range");
  }
  return sample_categorical(env_->kernel(h).row(env_->pair_index(s, a)), rng);
}

LinearMdp gen_experiment1(const Experiment1Params& p, std::uint64_t seed) {
  if (p.d < 1 || p.T < 1 || p.S < 1 || p.A < 1 || p.H < 1) {
    throw ParameterError("gen_experiment1: counts must be positive");
  }
  if (p.r < 1 || 2 * p.r > std::min(p.T, p.d)) {
    throw ParameterError("gen_experiment1: need 1 <= r <= min(T, d) / 2");
  }
  Engine rng = make_engine(seed, Stream::kEnvironment);
  const int d = p.d;
  const Index pairs = static_cast<Index>(p.S) * p.A;

  // Shared subspace, columns oriented so the e_1 coordinate is nonnegative.
  Matrix g(d, p.r);
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = standard_normal(rng);
  Matrix b = linalg::orthonormalize(g).columns();
  for (Index j = 0; j < b.cols(); ++j) {
    if (b(0, j) < 0.0) b.col(j) *= -1.0;
  }

  LinearMdpParts parts;
  parts.n_states = p.S;
  parts.n_actions = p.A;
  parts.horizon = p.H;
  parts.n_tasks = p.T;
  parts.feature_dim = d;
  parts.psi = Matrix::Zero(pairs, d);
  parts.phi = Matrix::Zero(pairs, d);

  // Gaussian embeddings are drawn from the cone where B^T psi >= 0, so that
  // nonnegative task weights give nonnegative rewards.
  const double scale = 1.0 / std::pow(static_cast<double>(d), 0.25);
  const int n_gaussian = p.A / 2;
  constexpr int kMaxTries = 1'000'000;
  std::vector<int> order(p.A);
  for (int s = 0; s < p.S; ++s) {
    std::iota(order.begin(), order.end(), 0);
    for (int i = p.A - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform01(rng) * (i + 1));
      std::swap(order[i], order[j]);
    }
    for (int k = 0; k < p.A; ++k) {
      const Index row = static_cast<Index>(s) * p.A + order[k];
      if (k >= n_gaussian) {
        parts.psi(row, 0) = 1.0;
        continue;
      }
      Vector v(d);
      int tries = 0;
      do {
        if (++tries > kMaxTries) {
          throw ParameterError("gen_experiment1: cannot sample admissible psi");
        }
        for (int i = 0; i < d; ++i) v(i) = scale * standard_normal(rng);
      } while ((b.transpose() * v).minCoeff() < 0.0);
      parts.psi.row(row) = v.transpose() / std::max(1.0, v.norm());
    }
  }

  for (Index i = 0; i < pairs; ++i) {
    for (int j = 0; j < d; ++j) parts.phi(i, j) = std::abs(standard_normal(rng));
    parts.phi.row(i) /= parts.phi.row(i).lpNorm<1>();
  }

  const double theta_cap = std::sqrt(static_cast<double>(d));
  for (int h = 0; h < p.H; ++h) {
    Matrix mu(d, p.S);
    for (int i = 0; i < d; ++i) {
      for (int s = 0; s < p.S; ++s) mu(i, s) = -std::log(1.0 - uniform01(rng));
      mu.row(i) /= mu.row(i).sum();
    }
    parts.mu.push_back(std::move(mu));

    Matrix w(p.r, p.T);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = std::abs(standard_normal(rng));
    const double top = (parts.psi * (b * w)).maxCoeff();
    if (top > 0.0) w /= top;
    const double norm_top = (b * w).colwise().norm().maxCoeff();
    if (norm_top > theta_cap) w *= theta_cap / norm_top;
    parts.theta_star.push_back((b * w).transpose());
    parts.b_star.push_back(b);
    parts.w_star.push_back(std::move(w));
  }
  parts.initial_dist = Vector::Constant(p.S, 1.0 / p.S);
  return LinearMdp(std::move(parts));
}

int grid_cell(int side, int row, int col) {
  if (row < 1 || row > side || col < 1 || col > side) {
    throw ParameterError("grid cell outside the maze");
  }
  return (row - 1) * side + (col - 1);
}

LinearMdp gen_gridmaze(const GridMazeParams& p) {
  if (p.side < 1 || p.H < 1) throw ParameterError("gen_gridmaze: side and H must be positive");
  if (p.goals.empty()) throw ParameterError("gen_gridmaze: need at least one goal");
  const int side = p.side;
  const int S = side * side;
  const int A = 4;
  const int d = S * A;
  const int T = static_cast<int>(p.goals.size());
  std::vector<int> goal_cells;
  for (const auto& [row, col] : p.goals) goal_cells.push_back(grid_cell(side, row, col));

  // Up, down, left, right in (row, col) offsets.
  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  const double d_max = side > 1 ? 2.0 * (side - 1) : 1.0;

  LinearMdpParts parts;
  parts.n_states = S;
  parts.n_actions = A;
  parts.horizon = p.H;
  parts.n_tasks = T;
  parts.feature_dim = d;
  parts.psi = Matrix::Identity(d, d);
  parts.phi = Matrix::Identity(d, d);
  parts.grid_side = side;

  Matrix mu = Matrix::Zero(d, S);
  Matrix theta = Matrix::Zero(T, d);
  for (int s = 0; s < S; ++s) {
    const int row = s / side;
    const int col = s % side;
    for (int a = 0; a < A; ++a) {
      const int nr = std::clamp(row + kDr[a], 0, side - 1);
      const int nc = std::clamp(col + kDc[a], 0, side - 1);
      const int next = nr * side + nc;
      const int i = s * A + a;
      mu(i, next) = 1.0;
      for (int t = 0; t < T; ++t) {
        const int g = goal_cells[t];
        const int dist = std::abs(nr - g / side) + std::abs(nc - g % side);
        theta(t, i) = 1.0 - dist / d_max;
      }
    }
  }
  parts.mu.assign(p.H, mu);
  parts.theta_star.assign(p.H, theta);
  parts.initial_dist = Vector::Constant(S, 1.0 / S);
  return LinearMdp(std::move(parts));
}

}  // namespace mtrl::mdp
