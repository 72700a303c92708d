#pragma once

#include <filesystem>
#include <vector>

#include "mtrl/config.hpp"
#include "mtrl/harness.hpp"
#include "mtrl/linear_mdp.hpp"
#include "mtrl/report.hpp"

namespace mtrl::experiment {

/// Bound checks of the mtrl estimate at one (trial, K).
struct BoundChecks {
  int trial = 0;
  int K = 0;
  harness::BoundReport estimation;
  harness::ValueGapReport value_gap;
  harness::BoundReport regret;
};

struct TrialResult {
  std::vector<report::MetricsRecord> metrics;
  std::vector<report::DesignRecord> design;
  std::vector<BoundChecks> checks;
};

struct ExperimentResult {
  std::vector<report::MetricsRecord> metrics;
  std::vector<report::DesignRecord> design;
  std::vector<BoundChecks> checks;
  std::vector<report::AggregateRow> aggregate;
};

/// Environment of one trial (shared across trials with fixed_env).
mdp::LinearMdp make_environment(const config::ExperimentConfig& cfg, int trial);

/// Stages 1-4 and the enabled baselines for one trial. Metrics rows come in
/// method, K, h order.
TrialResult run_trial(const config::ExperimentConfig& cfg, int trial);

/// Runs every trial on a worker pool and aggregates. Rows are ordered by
/// trial regardless of scheduling. Writes nothing.
ExperimentResult run_trials(const config::ExperimentConfig& cfg);

/// metrics.csv, aggregate.csv, design.csv and, when enabled, the SVG plots.
void write_outputs(const config::ExperimentConfig& cfg, const ExperimentResult& result,
                   const std::filesystem::path& dir);

/// run_trials followed by write_outputs into cfg.output_dir.
ExperimentResult run_experiment(const config::ExperimentConfig& cfg);

}  // namespace mtrl::experiment
