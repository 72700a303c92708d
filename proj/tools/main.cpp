#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mtrl/config.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/experiment.hpp"
#include "mtrl/explore_design.hpp"
#include "mtrl/report.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kRuntime = 2, kIo = 3 };

int run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
        const std::optional<std::string>& out, const std::optional<std::string>& methods,
        const std::optional<std::string>& preset) {
  mtrl::config::ExperimentConfig cfg = mtrl::config::load_config(config_path, preset);
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.output_dir = *out;
  if (methods) {
    cfg.methods.clear();
    std::string item;
    for (char c : *methods + ",") {
      if (c == ',') {
        if (!item.empty()) cfg.methods.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
  }
  mtrl::config::validate(cfg);

  const auto result = mtrl::experiment::run_experiment(cfg);
  int qualifying = 0, err_bad = 0, regret_bad = 0, gap_bad = 0;
  for (const auto& c : result.checks) {
    qualifying += c.estimation.qualifies;
    err_bad += !c.estimation.holds;
    regret_bad += !c.regret.holds;
    gap_bad += c.value_gap.violations;
  }
  fmt::print("wrote {} metric rows to {}\n", result.metrics.size(), cfg.output_dir);
  if (!result.checks.empty()) {
    fmt::print("bound checks: {} of {} (trial, K) cells with delta <= 0.1; "
               "error-bound violations {}, regret-bound violations {}, value-gap violations {}\n",
               qualifying, result.checks.size(), err_bad, regret_bad, gap_bad);
  }
  return kOk;
}

int validate(const std::string& config_path) {
  const auto cfg = mtrl::config::load_config(config_path);
  fmt::print("{}", mtrl::config::to_text(cfg));
  return kOk;
}

int plot(const std::string& in, const std::string& out) {
  const auto records = mtrl::report::parse_metrics_csv(mtrl::report::read_text(in));
  mtrl::report::write_plots(mtrl::report::aggregate(records), out);
  fmt::print("wrote sd.svg, err.svg and regret.svg to {}\n", out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task low-rank reward RL benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, methods, preset;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write CSV and SVG outputs");
  run_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Master seed (overrides the config's seeds)");
  run_cmd->add_option("--out", out, "Output directory");
  run_cmd->add_option("--methods", methods, "Comma list of mtrl,random,mom,thompson");
  run_cmd->add_option("--preset", preset, "Base preset")
      ->check(CLI::IsMember({"desk", "full", "gridmaze"}));

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a config file");
  validate_cmd->add_option("--config", validate_path, "Config file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string plot_in, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG plots from metrics.csv");
  plot_cmd->add_option("--in", plot_in, "metrics.csv")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return run(config_path, seed, out, methods, preset);
    if (*validate_cmd) return validate(validate_path);
    if (*plot_cmd) return plot(plot_in, plot_out);
  } catch (const mtrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const mtrl::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const mtrl::design::CoverageUnattainable& e) {
    std::cerr << "coverage unattainable at step " << e.h() + 1 << ": " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
