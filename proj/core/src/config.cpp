#include "mtrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mtrl/errors.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

// "10,20,40" or "start:stop:step" (inclusive).
std::vector<int> parse_k_grid(const std::string& v) {
  std::vector<int> out;
  if (v.find(':') != std::string::npos) {
    const auto parts = split(v, ':');
    if (parts.size() != 3) throw ConfigError("K_grid: range form is start:stop:step");
    const int start = parse_int<int>("K_grid", parts[0]);
    const int stop = parse_int<int>("K_grid", parts[1]);
    const int step = parse_int<int>("K_grid", parts[2]);
    if (step < 1) throw ConfigError("K_grid: step must be positive");
    for (int k = start; k <= stop; k += step) out.push_back(k);
    return out;
  }
  for (const auto& item : split(v, ',')) out.push_back(parse_int<int>("K_grid", item));
  return out;
}

// "1,1; 2,2; 3,3"
std::vector<std::pair<int, int>> parse_goals(const std::string& v) {
  std::vector<std::pair<int, int>> out;
  for (const auto& item : split(v, ';')) {
    if (item.empty()) continue;
    const auto rc = split(item, ',');
    if (rc.size() != 2) throw ConfigError(fmt::format("goals: '{}' is not row,col", item));
    out.emplace_back(parse_int<int>("goals", rc[0]), parse_int<int>("goals", rc[1]));
  }
  return out;
}

std::vector<std::pair<int, int>> diagonal_goals(int side) {
  std::vector<std::pair<int, int>> out;
  for (int i = 1; i <= side; ++i) out.emplace_back(i, i);
  return out;
}

Experiment parse_experiment(const std::string& v) {
  if (v == "synthetic") return Experiment::kSynthetic;
  if (v == "gridmaze") return Experiment::kGridMaze;
  throw ConfigError(fmt::format("experiment: '{}' is neither synthetic nor gridmaze", v));
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"experiment", [](auto& c, auto&, auto& v) { c.experiment = parse_experiment(v); }},
      {"d", [](auto& c, auto& k, auto& v) { c.d = parse_int<int>(k, v); }},
      {"T", [](auto& c, auto& k, auto& v) { c.T = parse_int<int>(k, v); }},
      {"r", [](auto& c, auto& k, auto& v) { c.r = parse_int<int>(k, v); }},
      {"S", [](auto& c, auto& k, auto& v) { c.S = parse_int<int>(k, v); }},
      {"A", [](auto& c, auto& k, auto& v) { c.A = parse_int<int>(k, v); }},
      {"H", [](auto& c, auto& k, auto& v) { c.H = parse_int<int>(k, v); }},
      {"side", [](auto& c, auto& k, auto& v) { c.side = parse_int<int>(k, v); }},
      {"goals", [](auto& c, auto&, auto& v) { c.goals = parse_goals(v); }},
      {"K_grid", [](auto& c, auto&, auto& v) { c.K_grid = parse_k_grid(v); }},
      {"N", [](auto& c, auto& k, auto& v) { c.N = parse_int<std::int64_t>(k, v); }},
      {"n_trials", [](auto& c, auto& k, auto& v) { c.n_trials = parse_int<int>(k, v); }},
      {"xi", [](auto& c, auto& k, auto& v) { c.xi = parse_double(k, v); }},
      {"x_net_size", [](auto& c, auto& k, auto& v) { c.x_net_size = parse_int<int>(k, v); }},
      {"stage1_budget",
       [](auto& c, auto& k, auto& v) { c.stage1_budget = parse_int<std::int64_t>(k, v); }},
      {"seeds",
       [](auto& c, auto& k, auto& v) {
         c.seeds.clear();
         for (const auto& item : split(v, ',')) c.seeds.push_back(parse_int<std::uint64_t>(k, item));
       }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"methods",
       [](auto& c, auto&, auto& v) {
         c.methods.clear();
         for (const auto& item : split(v, ',')) c.methods.push_back(item);
       }},
      {"plan_on_true_model",
       [](auto& c, auto& k, auto& v) { c.plan_on_true_model = parse_bool(k, v); }},
      {"sampled_regret", [](auto& c, auto& k, auto& v) { c.sampled_regret = parse_bool(k, v); }},
      {"fixed_env", [](auto& c, auto& k, auto& v) { c.fixed_env = parse_bool(k, v); }},
      {"obs_noise_sd", [](auto& c, auto& k, auto& v) { c.obs_noise_sd = parse_double(k, v); }},
      {"n_alternations",
       [](auto& c, auto& k, auto& v) { c.n_alternations = parse_int<int>(k, v); }},
      {"nu_iterations", [](auto& c, auto& k, auto& v) { c.nu_iterations = parse_int<int>(k, v); }},
      {"n_probe", [](auto& c, auto& k, auto& v) { c.n_probe = parse_int<int>(k, v); }},
      {"workers", [](auto& c, auto& k, auto& v) { c.workers = parse_int<int>(k, v); }},
      {"record_wall_time",
       [](auto& c, auto& k, auto& v) { c.record_wall_time = parse_bool(k, v); }},
      {"write_plots", [](auto& c, auto& k, auto& v) { c.write_plots = parse_bool(k, v); }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) return &fn;
  }
  return nullptr;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

bool ExperimentConfig::has_method(const std::string& m) const {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::uint64_t ExperimentConfig::trial_seed(int trial) const {
  if (seeds.size() > 1) return seeds.at(static_cast<std::size_t>(trial));
  return derive_seed(seeds.front(), Stream::kTrial, static_cast<std::uint64_t>(trial));
}

std::int64_t ExperimentConfig::effective_stage1_budget() const {
  if (stage1_budget > 0) return stage1_budget;
  return 50LL * S * A * H;
}

int ExperimentConfig::effective_x_net_size() const {
  return x_net_size > 0 ? x_net_size : 2 * d * d;
}

const char* to_string(Experiment e) {
  return e == Experiment::kSynthetic ? "synthetic" : "gridmaze";
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "desk") return c;
  if (name == "full") {
    c.d = 100;
    c.T = 100;
    c.S = 1000;
    c.A = 10;
    c.n_trials = 100;
    c.K_grid = {50, 100, 200, 400, 800, 1600};
    return c;
  }
  if (name == "gridmaze") {
    c.experiment = Experiment::kGridMaze;
    c.side = 5;
    c.goals = diagonal_goals(5);
    c.T = 5;
    c.S = 25;
    c.A = 4;
    c.d = 100;
    c.H = 10;
    c.r = 2;
    c.K_grid = parse_k_grid("10:2000:10");
    c.n_trials = 5;
    c.methods = {"mtrl", "random"};
    return c;
  }
  throw ConfigError(fmt::format("unknown preset '{}'", name));
}

ExperimentConfig parse_config(const std::string& text,
                              const std::optional<std::string>& preset_name) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (find_setter(key) == nullptr) {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", lineno, key));
    }
    if (!seen.insert(key).second) {
      throw ConfigError(fmt::format("line {}: key '{}' repeated", lineno, key));
    }
    if (value.empty()) throw ConfigError(fmt::format("line {}: empty value for '{}'", lineno, key));
    entries.emplace_back(key, value);
  }

  std::string base = preset_name.value_or("desk");
  if (!preset_name) {
    for (const auto& [key, value] : entries) {
      if (key == "experiment" && parse_experiment(value) == Experiment::kGridMaze) base = "gridmaze";
    }
  }
  ExperimentConfig cfg = preset(base);
  for (const auto& [key, value] : entries) (*find_setter(key))(cfg, key, value);

  if (cfg.experiment == Experiment::kGridMaze) {
    // Maze sizes follow from the grid; explicit values must agree.
    if (!seen.count("goals")) cfg.goals = diagonal_goals(cfg.side);
    const int S = cfg.side * cfg.side;
    auto derive = [&](const char* key, int& field, int value) {
      if (seen.count(key) && field != value) {
        throw ConfigError(fmt::format("{} = {} contradicts the maze (expected {})", key, field, value));
      }
      field = value;
    };
    derive("S", cfg.S, S);
    derive("A", cfg.A, 4);
    derive("d", cfg.d, S * 4);
    derive("T", cfg.T, static_cast<int>(cfg.goals.size()));
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& preset_name) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), preset_name);
}

void validate(const ExperimentConfig& c) {
  auto positive = [](const char* key, long long v) {
    if (v < 1) throw ConfigError(fmt::format("{} must be positive", key));
  };
  positive("d", c.d);
  positive("T", c.T);
  positive("r", c.r);
  positive("S", c.S);
  positive("A", c.A);
  positive("H", c.H);
  positive("N", c.N);
  positive("n_trials", c.n_trials);
  positive("n_alternations", c.n_alternations);
  positive("n_probe", c.n_probe);
  if (c.experiment == Experiment::kGridMaze) positive("side", c.side);
  if (c.K_grid.empty()) throw ConfigError("K_grid must not be empty");
  for (std::size_t i = 0; i < c.K_grid.size(); ++i) {
    positive("K_grid entries", c.K_grid[i]);
    if (i > 0 && c.K_grid[i] <= c.K_grid[i - 1]) {
      throw ConfigError("K_grid must be sorted ascending without repeats");
    }
  }
  if (2 * c.r > std::min(c.T, c.d)) throw ConfigError("r must not exceed min(T, d) / 2");
  if (!(c.xi > 0.0)) throw ConfigError("xi must be positive");
  if (c.x_net_size < 0 || c.stage1_budget < 0 || c.nu_iterations < 0 || c.workers < 0) {
    throw ConfigError("x_net_size, stage1_budget, nu_iterations and workers must be >= 0");
  }
  if (c.obs_noise_sd < 0.0) throw ConfigError("obs_noise_sd must be >= 0");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.seeds.size() > 1 && static_cast<int>(c.seeds.size()) != c.n_trials) {
    throw ConfigError("seeds must list one seed or exactly n_trials seeds");
  }
  if (c.methods.empty()) throw ConfigError("methods must not be empty");
  for (const auto& m : c.methods) {
    if (m != "mtrl" && m != "random" && m != "mom" && m != "thompson") {
      throw ConfigError(fmt::format("unknown method '{}'", m));
    }
  }
  if (c.experiment == Experiment::kGridMaze) {
    if (c.goals.empty()) throw ConfigError("goals must not be empty");
    for (const auto& [row, col] : c.goals) {
      if (row < 1 || row > c.side || col < 1 || col > c.side) {
        throw ConfigError(fmt::format("goal ({},{}) lies outside the grid", row, col));
      }
    }
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string to_text(const ExperimentConfig& c) {
  std::string goals;
  for (std::size_t i = 0; i < c.goals.size(); ++i) {
    goals += fmt::format("{}{},{}", i ? "; " : "", c.goals[i].first, c.goals[i].second);
  }
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i) methods += (i ? "," : "") + c.methods[i];
  std::string out;
  out += fmt::format("experiment = {}\n", to_string(c.experiment));
  out += fmt::format("d = {}\nT = {}\nr = {}\nS = {}\nA = {}\nH = {}\n", c.d, c.T, c.r, c.S, c.A, c.H);
  out += fmt::format("side = {}\n", c.side);
  if (!goals.empty()) out += fmt::format("goals = {}\n", goals);
  out += fmt::format("K_grid = {}\nN = {}\nn_trials = {}\nxi = {}\n", join_ints(c.K_grid), c.N,
                     c.n_trials, c.xi);
  out += fmt::format("x_net_size = {}\nstage1_budget = {}\nseeds = {}\noutput_dir = {}\n",
                     c.x_net_size, c.stage1_budget, seeds, c.output_dir);
  out += fmt::format("methods = {}\nplan_on_true_model = {}\nsampled_regret = {}\n", methods,
                     c.plan_on_true_model, c.sampled_regret);
  out += fmt::format("fixed_env = {}\nobs_noise_sd = {}\nn_alternations = {}\n", c.fixed_env,
                     c.obs_noise_sd, c.n_alternations);
  out += fmt::format("nu_iterations = {}\nn_probe = {}\nworkers = {}\n", c.nu_iterations,
                     c.n_probe, c.workers);
  out += fmt::format("record_wall_time = {}\nwrite_plots = {}\n", c.record_wall_time, c.write_plots);
  return out;
}

}  // namespace mtrl::config
