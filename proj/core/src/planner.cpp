#include "mtrl/planner.hpp"

#include <algorithm>
#include <cmath>

#include "mtrl/errors.hpp"

namespace mtrl::planner {

namespace {

using linalg::Index;

// Margin a later action must beat to displace an earlier one in argmax.
constexpr double kTieTol = 1e-12;

void check_rewards(int S, int A, int H, const RewardTable& rewards) {
  if (rewards.horizon() != H) {
    throw DimensionError("planner: reward horizon does not match the model");
  }
  for (const Matrix& r : rewards.per_step) {
    if (r.rows() != S || r.cols() != A) {
      throw DimensionError("planner: reward table shape does not match the model");
    }
    if (!r.allFinite()) throw DimensionError("planner: rewards must be finite");
  }
}

// Q_h(s, a) = R_h(s, a) + sum_s' P_h(s' | s, a) V_{h+1}(s').
Matrix backup(const Matrix& kernel, const Matrix& reward, const Vector* next) {
  Matrix q = reward;
  if (next == nullptr) return q;
  const Vector cont = kernel * *next;
  const Index A = reward.cols();
  for (Index s = 0; s < reward.rows(); ++s) {
    for (Index a = 0; a < A; ++a) q(s, a) += cont(s * A + a);
  }
  return q;
}

template <typename Model>
PlanResult plan_impl(const Model& model, const RewardTable& rewards) {
  const int S = model.n_states();
  const int A = model.n_actions();
  const int H = model.horizon();
  check_rewards(S, A, H, rewards);
  ValueTable values;
  values.V.resize(H);
  values.Q.resize(H);
  std::vector<Matrix> steps(H, Matrix::Zero(S, A));
  for (int h = H - 1; h >= 0; --h) {
    const Vector* next = h + 1 < H ? &values.V[h + 1] : nullptr;
    values.Q[h] = backup(model.kernel(h), rewards.per_step[h], next);
    values.V[h] = Vector(S);
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a) {
        if (values.Q[h](s, a) > values.Q[h](s, best) + kTieTol) best = a;
      }
      steps[h](s, best) = 1.0;
      values.V[h](s) = values.Q[h](s, best);
    }
  }
  return PlanResult{TabularPolicy(std::move(steps)), std::move(values)};
}

template <typename Model>
ValueTable evaluate_impl(const Model& model, const TabularPolicy& policy,
                         const RewardTable& rewards) {
  const int S = model.n_states();
  const int A = model.n_actions();
  const int H = model.horizon();
  check_rewards(S, A, H, rewards);
  if (policy.horizon() != H || policy.n_states() != S || policy.n_actions() != A) {
    throw DimensionError("evaluate_policy: policy shape does not match the model");
  }
  ValueTable values;
  values.V.resize(H);
  values.Q.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    const Vector* next = h + 1 < H ? &values.V[h + 1] : nullptr;
    values.Q[h] = backup(model.kernel(h), rewards.per_step[h], next);
    values.V[h] = policy.step(h).cwiseProduct(values.Q[h]).rowwise().sum();
  }
  return values;
}

}  // namespace

EmpiricalModel::EmpiricalModel(int n_states, int n_actions, int horizon)
    : n_states_(n_states), n_actions_(n_actions) {
  if (n_states < 1 || n_actions < 1 || horizon < 1) {
    throw DimensionError("EmpiricalModel: counts must be positive");
  }
  const Index pairs = static_cast<Index>(n_states) * n_actions;
  counts_.assign(horizon, CountMatrix::Zero(pairs, n_states));
  visits_.assign(horizon, std::vector<std::int64_t>(pairs, 0));
  phat_.assign(horizon, Matrix::Constant(pairs, n_states, 1.0 / n_states));
}

EmpiricalModel EmpiricalModel::from_counts(int n_states, int n_actions,
                                           std::vector<CountMatrix> transition_counts,
                                           std::int64_t episodes_used) {
  EmpiricalModel model(n_states, n_actions,
                       static_cast<int>(std::max<std::size_t>(1, transition_counts.size())));
  if (transition_counts.empty()) {
    throw DimensionError("EmpiricalModel: need at least one step");
  }
  const Index pairs = static_cast<Index>(n_states) * n_actions;
  for (std::size_t h = 0; h < transition_counts.size(); ++h) {
    const CountMatrix& c = transition_counts[h];
    if (c.rows() != pairs || c.cols() != n_states) {
      throw DimensionError("EmpiricalModel: count table shape");
    }
    if (c.minCoeff() < 0) throw InvariantError("EmpiricalModel: negative counts");
    model.counts_[h] = c;
    for (Index i = 0; i < pairs; ++i) {
      model.visits_[h][i] = c.row(i).sum();
      model.refresh_row(static_cast<int>(h), static_cast<int>(i));
    }
  }
  model.episodes_used_ = episodes_used;
  return model;
}

void EmpiricalModel::record(int h, int s, int a, int s_next) {
  if (h < 0 || h >= horizon() || s < 0 || s >= n_states_ || a < 0 ||
      a >= n_actions_ || s_next < 0 || s_next >= n_states_) {
    throw DimensionError("EmpiricalModel::record: index out of range");
  }
  const int i = pair_index(s, a);
  ++counts_[h](i, s_next);
  ++visits_[h][i];
  refresh_row(h, i);
}

void EmpiricalModel::refresh_row(int h, int pair) {
  const std::int64_t n = visits_[h][pair];
  if (n == 0) {
    phat_[h].row(pair).setConstant(1.0 / n_states_);
  } else {
    phat_[h].row(pair) = counts_[h].row(pair).cast<double>() / static_cast<double>(n);
  }
}

std::int64_t EmpiricalModel::visits(int h, int s, int a) const {
  if (h < 0 || h >= horizon() || s < 0 || s >= n_states_ || a < 0 || a >= n_actions_) {
    throw DimensionError("EmpiricalModel::visits: index out of range");
  }
  return visits_[h][pair_index(s, a)];
}

int EmpiricalModel::n_unvisited() const {
  int n = 0;
  for (const auto& step : visits_) {
    n += static_cast<int>(std::count(step.begin(), step.end(), 0));
  }
  return n;
}

double ValueTable::initial_value(const Vector& initial_dist) const {
  if (V.empty() || V.front().size() != initial_dist.size()) {
    throw DimensionError("ValueTable::initial_value: size mismatch");
  }
  return initial_dist.dot(V.front());
}

PlanResult plan(const EmpiricalModel& model, const RewardTable& rewards) {
  return plan_impl(model, rewards);
}

PlanResult plan(const LinearMdp& env, const RewardTable& rewards) {
  return plan_impl(env, rewards);
}

ValueTable evaluate_policy(const EmpiricalModel& model, const TabularPolicy& policy,
                           const RewardTable& rewards) {
  return evaluate_impl(model, policy, rewards);
}

ValueTable evaluate_policy(const LinearMdp& env, const TabularPolicy& policy,
                           const RewardTable& rewards) {
  return evaluate_impl(env, policy, rewards);
}

std::int64_t default_reward_free_budget(int n_states, int n_actions, int horizon) {
  return 50LL * n_states * n_actions * horizon;
}

EmpiricalModel reward_free_explore(const mdp::RewardFreeView& env,
                                   std::int64_t n_episodes, Engine& rng,
                                   const ExploreOptions& options) {
  if (n_episodes < 1) throw ParameterError("reward_free_explore: n_episodes must be >= 1");
  const int S = env.n_states();
  const int A = env.n_actions();
  const int H = env.horizon();
  const std::int64_t batch =
      options.batch_episodes > 0 ? options.batch_episodes : static_cast<std::int64_t>(S) * A;
  EmpiricalModel model(S, A, H);
  RewardTable bonus = RewardTable::zeros(S, A, H);

  std::int64_t done = 0;
  while (done < n_episodes) {
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double n = static_cast<double>(std::max<std::int64_t>(1, model.visits(h, s, a)));
          bonus.per_step[h](s, a) = 1.0 / std::sqrt(n);
        }
      }
    }
    const TabularPolicy policy = plan(model, bonus).policy;
    const std::int64_t round = std::min(batch, n_episodes - done);
    for (std::int64_t e = 0; e < round; ++e) {
      int s = env.sample_initial(rng);
      for (int h = 0; h < H; ++h) {
        const int a = mdp::sample_categorical(policy.step(h).row(s), rng);
        const int next = env.sample_next(s, a, h, rng);
        model.record(h, s, a, next);
        s = next;
      }
      model.add_episode();
    }
    done += round;
  }
  return model;
}

}  // namespace mtrl::planner
