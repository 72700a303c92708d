#include "mtrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <optional>
#include <thread>

#include "mtrl/errors.hpp"
#include "mtrl/explore_design.hpp"
#include "mtrl/linalg.hpp"
#include "mtrl/lowrank.hpp"
#include "mtrl/planner.hpp"
#include "mtrl/thompson.hpp"

namespace mtrl::experiment {

namespace {

using Clock = std::chrono::steady_clock;
using config::ExperimentConfig;
using linalg::Matrix;
using mdp::LinearMdp;
using mdp::TabularPolicy;

std::string csv_method(const std::string& m) { return m == "random" ? "random_policy" : m; }

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

report::DesignRecord design_row(int trial, const std::string& policy,
                                const design::DesignDiagnostics& diag) {
  report::DesignRecord row;
  row.trial = trial;
  row.policy = policy;
  row.h = diag.h + 1;
  row.zeta_hat = diag.zeta_hat;
  row.xi_hat = diag.xi_hat;
  return row;
}

struct Exploration {
  TabularPolicy policy;
  std::vector<report::DesignRecord> design;
};

Exploration design_policy(const ExperimentConfig& cfg, const LinearMdp& env,
                          const planner::EmpiricalModel& model, std::uint64_t seed, int trial,
                          const design::XNet& net) {
  Engine coverage_rng = make_engine(seed, Stream::kCoverage);
  const design::FeatureBasis basis = design::collect_feature_basis(env, model, coverage_rng);

  design::AlternationOptions alt;
  alt.n_alternations = cfg.n_alternations;
  alt.nu_iterations = cfg.nu_iterations;
  std::vector<design::MinimaxSolution> solutions;
  solutions.push_back(design::solve_pi1(basis, env, cfg.xi, net));
  for (int h = 1; h < env.horizon(); ++h) {
    solutions.push_back(design::solve_pih(basis, env, h, cfg.xi, net, alt));
  }

  Exploration out{design::assemble_exploration_policy(solutions, env), {}};
  Engine probe_rng = make_engine(seed, Stream::kProbe, 0);
  const auto diags = design::measure_design(env, out.policy, cfg.n_probe, net, probe_rng);
  for (const auto& diag : diags) {
    report::DesignRecord row = design_row(trial, "mtrl", diag);
    const auto& sol = solutions.at(diag.h);
    row.M = basis.M;
    row.lambda_min = basis.lambda_min(diag.h);
    row.minimax_value = sol.value;
    row.alternations = static_cast<int>(sol.value_history.size());
    row.converged = sol.converged;
    out.design.push_back(row);
  }
  return out;
}

}  // namespace

LinearMdp make_environment(const ExperimentConfig& cfg, int trial) {
  if (cfg.experiment == config::Experiment::kGridMaze) {
    return mdp::gen_gridmaze({cfg.side, cfg.goals, cfg.H});
  }
  const std::uint64_t seed =
      cfg.fixed_env ? derive_seed(cfg.seeds.front(), Stream::kEnvironment)
                    : derive_seed(cfg.trial_seed(trial), Stream::kEnvironment);
  return mdp::gen_experiment1({cfg.d, cfg.T, cfg.r, cfg.S, cfg.A, cfg.H}, seed);
}

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  TrialResult out;
  const std::uint64_t seed = cfg.trial_seed(trial);
  const LinearMdp env = make_environment(cfg, trial);
  const int H = env.horizon();
  const int K_max = cfg.K_grid.back();
  const std::string experiment = config::to_string(cfg.experiment);

  Engine rf_rng = make_engine(seed, Stream::kRewardFree);
  const planner::EmpiricalModel model = planner::reward_free_explore(
      mdp::RewardFreeView(env), cfg.effective_stage1_budget(), rf_rng);
  const linalg::Vector v_star = harness::optimal_values(env);
  const design::XNet net =
      design::build_x_net(env.feature_dim(), cfg.effective_x_net_size(),
                          derive_seed(seed, Stream::kDesignNet));

  std::optional<TabularPolicy> explore;
  if (cfg.has_method("mtrl") || cfg.has_method("mom")) {
    Exploration e = design_policy(cfg, env, model, seed, trial, net);
    explore = std::move(e.policy);
    out.design = std::move(e.design);
  }
  const TabularPolicy uniform = TabularPolicy::uniform(env.n_states(), env.n_actions(), H);
  if (cfg.has_method("random")) {
    Engine probe_rng = make_engine(seed, Stream::kProbe, 1);
    for (const auto& diag : design::measure_design(env, uniform, cfg.n_probe, net, probe_rng)) {
      out.design.push_back(design_row(trial, "random_policy", diag));
    }
  }

  const lowrank::CollectOptions collect{cfg.obs_noise_sd};
  std::optional<lowrank::SampleBatch> designed_batch;
  std::optional<lowrank::SampleBatch> uniform_batch;

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const std::string& method = cfg.methods[mi];
    auto push = [&](int K, int h, double sd, double err, double regret, double wall) {
      out.metrics.push_back({experiment, csv_method(method), trial, h + 1, K, sd, err, regret,
                             cfg.record_wall_time ? wall : 0.0});
    };

    if (method == "thompson") {
      thompson::ThompsonOptions opts;
      opts.observation_noise_sd = cfg.obs_noise_sd;
      opts.plan_on_true_model = cfg.plan_on_true_model;
      const auto start = Clock::now();
      const auto checkpoints =
          thompson::run_thompson(env, model, cfg.K_grid, derive_seed(seed, Stream::kThompson), opts);
      const double wall = elapsed_ms(start);
      for (const auto& cp : checkpoints) {
        const double regret =
            static_cast<double>(cfg.N) * cp.gap_sum / static_cast<double>(cp.K);
        for (int h = 0; h < H; ++h) {
          const Matrix& theta = cp.theta_mean[h];
          const auto B_hat = linalg::reduced_svd(theta.transpose(), cfg.r).U;
          const double sd = linalg::subspace_distance(B_hat, env.top_basis(h, cfg.r));
          push(cp.K, h, sd, lowrank::rel_frobenius_error(theta, env.theta_star(h)), regret, wall);
        }
      }
      continue;
    }

    const lowrank::SampleBatch* batch = nullptr;
    if (method == "random") {
      if (!uniform_batch) {
        uniform_batch = lowrank::collect_reward_samples(
            env, uniform, K_max, derive_seed(seed, Stream::kRewardSamples, 1), collect);
      }
      batch = &*uniform_batch;
    } else {
      if (!designed_batch) {
        designed_batch = lowrank::collect_reward_samples(
            env, *explore, K_max, derive_seed(seed, Stream::kRewardSamples, 0), collect);
      }
      batch = &*designed_batch;
    }

    for (const int K : cfg.K_grid) {
      const lowrank::SampleBatch sub = batch->prefix(K);
      const auto start = Clock::now();
      const lowrank::FactoredEstimate est = method == "mom"
                                                ? lowrank::mom_estimate(sub, cfg.r, &env)
                                                : lowrank::estimate(sub, cfg.r, &env);
      const auto policies =
          harness::construct_policies(est, env, model, cfg.plan_on_true_model);
      const double wall = elapsed_ms(start);

      double regret = 0.0;
      if (cfg.sampled_regret) {
        Engine reg_rng = make_engine(seed, Stream::kRegretEpisodes,
                                     (static_cast<std::uint64_t>(mi) << 32) |
                                         static_cast<std::uint64_t>(K));
        regret = harness::sampled_regret(env, policies, cfg.N, reg_rng);
      } else {
        regret = harness::compute_regret(env, policies, cfg.N, &v_star);
      }
      for (int h = 0; h < H; ++h) {
        const auto& step = est.steps[h];
        push(K, h, step.sd_to_truth.value_or(0.0), step.rel_frobenius_error.value_or(0.0),
             regret, wall);
      }

      if (method == "mtrl") {
        BoundChecks c;
        c.trial = trial;
        c.K = K;
        c.estimation = harness::check_estimation_bound(est, env.feature_dim());
        c.value_gap = harness::check_value_gap(env, est);
        const double exact = cfg.sampled_regret
                                 ? harness::compute_regret(env, policies, cfg.N, &v_star)
                                 : regret;
        c.regret = harness::check_regret_bound(exact, c.estimation.delta, cfg.N, env.n_tasks(), H,
                                             env.feature_dim());
        out.checks.push_back(c);
      }
    }
  }
  return out;
}

ExperimentResult run_trials(const ExperimentConfig& cfg) {
  config::validate(cfg);
  const int n = cfg.n_trials;
  std::vector<TrialResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        results[i] = run_trial(cfg, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult out;
  for (auto& r : results) {
    out.metrics.insert(out.metrics.end(), r.metrics.begin(), r.metrics.end());
    out.design.insert(out.design.end(), r.design.begin(), r.design.end());
    out.checks.insert(out.checks.end(), r.checks.begin(), r.checks.end());
  }
  for (const auto& m : out.metrics) report::validate_record(m);
  out.aggregate = report::aggregate(out.metrics);
  return out;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                   const std::filesystem::path& dir) {
  report::write_text(dir / "metrics.csv", report::metrics_csv(result.metrics));
  report::write_text(dir / "aggregate.csv", report::aggregate_csv(result.aggregate));
  report::write_text(dir / "design.csv", report::design_csv(result.design));
  if (cfg.write_plots) report::write_plots(result.aggregate, dir);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result = run_trials(cfg);
  write_outputs(cfg, result, cfg.output_dir);
  return result;
}

}  // namespace mtrl::experiment
