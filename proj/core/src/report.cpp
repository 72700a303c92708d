#include "mtrl/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "mtrl/errors.hpp"

namespace mtrl::report {

namespace {

constexpr double kRegretFloor = -1e-9;

const std::vector<std::string> kMethods = {"mtrl", "random_policy", "mom", "thompson"};
const std::vector<std::string> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                          "#9467bd", "#8c564b"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvariantError(fmt::format("metrics.csv line {}: '{}' is not a number", line, s));
  }
}

int to_int(const std::string& s, int line) {
  const double v = to_double(s, line);
  if (v != std::floor(v)) {
    throw InvariantError(fmt::format("metrics.csv line {}: '{}' is not an integer", line, s));
  }
  return static_cast<int>(v);
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    const double n = static_cast<double>(v.size());
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

std::string opt_str(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }
std::string opt_str(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }
std::string opt_str(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : ""; }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void validate_record(const MetricsRecord& r) {
  auto fail = [&](const std::string& what) {
    throw InvariantError(fmt::format("metrics record ({}, trial {}, h {}, K {}): {}", r.method,
                                     r.trial, r.h, r.K, what));
  };
  if (r.experiment != "synthetic" && r.experiment != "gridmaze") fail("unknown experiment");
  if (std::find(kMethods.begin(), kMethods.end(), r.method) == kMethods.end()) {
    fail("unknown method");
  }
  if (r.trial < 0) fail("negative trial");
  if (r.h < 1 || r.K < 1) fail("h and K must be positive");
  if (!std::isfinite(r.sd) || r.sd < 0.0 || r.sd > 1.0) fail("sd outside [0, 1]");
  if (!std::isfinite(r.est_err) || r.est_err < 0.0) fail("est_err negative");
  if (!std::isfinite(r.regret) || r.regret < kRegretFloor) fail("regret below -1e-9");
  if (!std::isfinite(r.wall_ms) || r.wall_ms < 0.0) fail("negative wall_ms");
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
  std::vector<std::string> method_order;
  using Key = std::tuple<std::size_t, int, int>;
  std::map<Key, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find(method_order.begin(), method_order.end(), r.method);
    if (it == method_order.end()) {
      method_order.push_back(r.method);
      it = std::prev(method_order.end());
    }
    const auto m = static_cast<std::size_t>(it - method_order.begin());
    groups[{m, r.K, r.h}].push_back(&r);
  }
  std::vector<AggregateRow> out;
  out.reserve(groups.size());
  for (const auto& [key, rows] : groups) {
    std::vector<double> sd, err, reg;
    for (const auto* r : rows) {
      sd.push_back(r->sd);
      err.push_back(r->est_err);
      reg.push_back(r->regret);
    }
    AggregateRow a;
    a.method = method_order[std::get<0>(key)];
    a.K = std::get<1>(key);
    a.h = std::get<2>(key);
    const Stats s1 = stats(sd), s2 = stats(err), s3 = stats(reg);
    a.mean_sd = s1.mean;
    a.se_sd = s1.se;
    a.mean_err = s2.mean;
    a.se_err = s2.se;
    a.mean_regret = s3.mean;
    a.se_regret = s3.se;
    a.n = static_cast<int>(rows.size());
    out.push_back(a);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out = join(kMetricsColumns) + "\n";
  for (const auto& r : records) {
    validate_record(r);
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.experiment, r.method, r.trial, r.h, r.K,
                       r.sd, r.est_err, r.regret, r.wall_ms);
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out = join(kAggregateColumns) + "\n";
  for (const auto& a : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", a.method, a.K, a.h, a.mean_sd, a.se_sd,
                       a.mean_err, a.se_err, a.mean_regret, a.se_regret);
  }
  return out;
}

std::string design_csv(const std::vector<DesignRecord>& rows) {
  std::string out =
      "trial,policy,h,zeta_hat,xi_hat,M,lambda_min,minimax_value,alternations,converged\n";
  for (const auto& d : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", d.trial, d.policy, d.h, d.zeta_hat,
                       d.xi_hat, opt_str(d.M), opt_str(d.lambda_min), opt_str(d.minimax_value),
                       opt_str(d.alternations), opt_str(d.converged));
  }
  return out;
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != kMetricsColumns) {
    throw InvariantError("metrics.csv: header does not match the expected columns");
  }
  std::vector<MetricsRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != kMetricsColumns.size()) {
      throw InvariantError(fmt::format("metrics.csv line {}: expected {} cells", lineno,
                                       kMetricsColumns.size()));
    }
    MetricsRecord r;
    r.experiment = cells[0];
    r.method = cells[1];
    r.trial = to_int(cells[2], lineno);
    r.h = to_int(cells[3], lineno);
    r.K = to_int(cells[4], lineno);
    r.sd = to_double(cells[5], lineno);
    r.est_err = to_double(cells[6], lineno);
    r.regret = to_double(cells[7], lineno);
    r.wall_ms = to_double(cells[8], lineno);
    validate_record(r);
    out.push_back(r);
  }
  return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  constexpr double W = 720, Hgt = 440, left = 70, right = 160, top = 40, bottom = 55;
  const double pw = W - left - right, ph = Hgt - top - bottom;

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.mean[i] - 2.0 * s.se[i]);
      ymax = std::max(ymax, s.mean[i] + 2.0 * s.se[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1.0;
  const bool log_x = xmin > 0.0 && xmax / xmin >= 20.0;
  auto tx = [&](double x) {
    const double u = log_x ? (std::log(x) - std::log(xmin)) / (std::log(xmax) - std::log(xmin))
                           : (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.5);
    return left + u * pw;
  };
  auto ty = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
      W, Hgt, left + pw / 2, escape_xml(title));
  out += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      left, top, pw, ph);
  for (int i = 0; i <= 5; ++i) {
    const double y = ymin + (ymax - ymin) * i / 5.0;
    out += fmt::format(
        "<line x1=\"{0}\" x2=\"{1}\" y1=\"{2:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.3g}</text>\n",
        left, left + pw, ty(y), left - 6, ty(y) + 4, y);
    const double x = log_x ? std::exp(std::log(xmin) + (std::log(xmax) - std::log(xmin)) * i / 5.0)
                           : xmin + (xmax - xmin) * i / 5.0;
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", tx(x),
                       top + ph + 16, x);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}{}</text>\n", left + pw / 2,
                     Hgt - 14, escape_xml(x_label), log_x ? " (log scale)" : "");
  out += fmt::format(
      "<text transform=\"translate(18,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
      top + ph / 2, escape_xml(y_label));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string& color = kColors[k % kColors.size()];
    std::string band, line;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      band += fmt::format("{:.2f},{:.2f} ", tx(s.x[i]), ty(s.mean[i] + 2.0 * s.se[i]));
      line += fmt::format("{:.2f},{:.2f} ", tx(s.x[i]), ty(s.mean[i]));
    }
    for (std::size_t i = s.x.size(); i-- > 0;) {
      band += fmt::format("{:.2f},{:.2f} ", tx(s.x[i]), ty(s.mean[i] - 2.0 * s.se[i]));
    }
    out += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
                       band, color);
    out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       line, color);
    const double ly = top + 14 + 20.0 * static_cast<double>(k);
    out += fmt::format(
        "<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"3\"/>"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        left + pw + 12, left + pw + 36, ly, color, left + pw + 42, ly + 4, escape_xml(s.name));
  }
  out += "</svg>\n";
  return out;
}

void write_plots(const std::vector<AggregateRow>& rows, const std::filesystem::path& dir) {
  std::vector<std::string> methods;
  for (const auto& a : rows) {
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
      methods.push_back(a.method);
    }
  }
  struct Acc {
    double sd = 0, se_sd = 0, err = 0, se_err = 0, reg = 0, se_reg = 0;
    int count = 0;
  };
  std::vector<Series> sd, err, reg;
  for (const auto& m : methods) {
    std::map<int, Acc> by_k;
    for (const auto& a : rows) {
      if (a.method != m) continue;
      Acc& acc = by_k[a.K];
      acc.sd += a.mean_sd;
      acc.se_sd += a.se_sd;
      acc.err += a.mean_err;
      acc.se_err += a.se_err;
      acc.reg += a.mean_regret;
      acc.se_reg += a.se_regret;
      ++acc.count;
    }
    Series s1{m, {}, {}, {}}, s2{m, {}, {}, {}}, s3{m, {}, {}, {}};
    for (const auto& [K, acc] : by_k) {
      const double n = acc.count;
      for (Series* s : {&s1, &s2, &s3}) s->x.push_back(K);
      s1.mean.push_back(acc.sd / n);
      s1.se.push_back(acc.se_sd / n);
      s2.mean.push_back(acc.err / n);
      s2.se.push_back(acc.se_err / n);
      s3.mean.push_back(acc.reg / n);
      s3.se.push_back(acc.se_reg / n);
    }
    sd.push_back(s1);
    err.push_back(s2);
    reg.push_back(s3);
  }
  write_text(dir / "sd.svg", line_chart_svg("Subspace distance", "K", "SD(B_hat, B*)", sd));
  write_text(dir / "err.svg",
             line_chart_svg("Estimation error", "K", "||Theta_hat - Theta*||_F / ||Theta*||_F", err));
  write_text(dir / "regret.svg", line_chart_svg("Regret", "K", "Reg(N, T)", reg));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace mtrl::report
