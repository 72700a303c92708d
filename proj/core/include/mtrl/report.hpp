#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtrl::report {

/// One row of metrics.csv. h is 1-based.
struct MetricsRecord {
  std::string experiment;
  std::string method;
  int trial = 0;
  int h = 0;
  int K = 0;
  double sd = 0.0;
  double est_err = 0.0;
  double regret = 0.0;
  double wall_ms = 0.0;
};

/// Mean and standard error over trials of one (method, K, h) cell.
struct AggregateRow {
  std::string method;
  int K = 0;
  int h = 0;
  double mean_sd = 0.0;
  double se_sd = 0.0;
  double mean_err = 0.0;
  double se_err = 0.0;
  double mean_regret = 0.0;
  double se_regret = 0.0;
  int n = 0;
};

/// Exploration-design diagnostics for one (trial, policy, h). The minimax
/// fields are absent for the uniform policy.
struct DesignRecord {
  int trial = 0;
  std::string policy;
  int h = 0;
  double zeta_hat = 0.0;
  double xi_hat = 0.0;
  std::optional<int> M;
  std::optional<double> lambda_min;
  std::optional<double> minimax_value;
  std::optional<int> alternations;
  std::optional<bool> converged;
};

inline const std::vector<std::string> kMetricsColumns = {
    "experiment", "method", "trial", "h", "K", "sd", "est_err", "regret", "wall_ms"};
inline const std::vector<std::string> kAggregateColumns = {
    "method", "K", "h", "mean_sd", "se_sd", "mean_err", "se_err", "mean_regret", "se_regret"};

/// Throws InvariantError when a record breaks the schema: unknown method,
/// sd outside [0, 1], negative est_err, regret below -1e-9, non-finite values,
/// non-positive h or K, negative trial or wall_ms.
void validate_record(const MetricsRecord& record);

/// Groups by (method, K, h) in first-appearance order of methods, then
/// ascending K and h. Standard errors use the sample deviation over sqrt(n).
std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records);

std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string design_csv(const std::vector<DesignRecord>& rows);

/// Parses metrics.csv text; every row is validated. Throws InvariantError on
/// a bad header, row shape or value.
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> se;
};

/// Self-contained SVG line chart with +-2 stderr bands.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

/// sd.svg, err.svg and regret.svg from aggregate rows; the curves average the
/// per-step means and standard errors over h.
void write_plots(const std::vector<AggregateRow>& rows, const std::filesystem::path& dir);

/// Writes text to a file, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mtrl::report
