#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtrl::config {

enum class Experiment { kSynthetic, kGridMaze };

struct ExperimentConfig {
  Experiment experiment = Experiment::kSynthetic;
  int d = 20;
  int T = 20;
  int r = 2;
  int S = 100;
  int A = 6;
  int H = 5;
  int side = 5;
  std::vector<std::pair<int, int>> goals;
  std::vector<int> K_grid = {50, 100, 200, 400, 800, 1600};
  std::int64_t N = 100;
  int n_trials = 20;
  double xi = 0.25;
  int x_net_size = 0;            // 0: 2 d^2
  std::int64_t stage1_budget = 0;  // 0: 50 S A H
  std::vector<std::uint64_t> seeds = {20240601};
  std::string output_dir = "results";

  // Switches beyond the core fields.
  std::vector<std::string> methods = {"mtrl", "random", "mom", "thompson"};
  bool plan_on_true_model = false;
  bool sampled_regret = false;
  bool fixed_env = false;
  double obs_noise_sd = 0.0;
  int n_alternations = 20;
  int nu_iterations = 200;
  int n_probe = 2000;
  int workers = 0;  // 0: hardware concurrency
  bool record_wall_time = false;
  bool write_plots = true;

  bool has_method(const std::string& m) const;
  /// Seed of trial i: the i-th listed seed, or one derived from the single
  /// master seed.
  std::uint64_t trial_seed(int trial) const;
  std::int64_t effective_stage1_budget() const;
  int effective_x_net_size() const;
};

const char* to_string(Experiment e);

/// Presets: "desk", "full", "gridmaze". Throws ConfigError on unknown names.
ExperimentConfig preset(const std::string& name);

/// Parses flat `key = value` text with `#` comments on top of a preset. The
/// preset is `preset_name` when given, else the one matching the file's
/// `experiment` key (desk for synthetic). Unknown or repeated keys, malformed
/// values and failed validation throw ConfigError.
ExperimentConfig parse_config(const std::string& text,
                              const std::optional<std::string>& preset_name = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& preset_name = std::nullopt);

/// Throws ConfigError describing the first violated constraint.
void validate(const ExperimentConfig& cfg);

/// Renders the config back to the file format (every key, canonical order).
std::string to_text(const ExperimentConfig& cfg);

}  // namespace mtrl::config
