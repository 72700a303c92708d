#include "mtrl/snapshot.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mtrl/errors.hpp"

namespace mtrl::snapshot {

namespace {

using json = nlohmann::ordered_json;
using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

constexpr const char* kEnvFormat = "mtrl-linear-mdp";
constexpr const char* kModelFormat = "mtrl-empirical-model";
constexpr int kVersion = 1;

template <typename Derived>
json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw IoError("snapshot: matrix data length does not match its shape");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  std::size_t k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = data[k++].get<Scalar>();
  return m;
}

template <typename Scalar, typename M>
json matrices_to_json(const std::vector<M>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m));
  return out;
}

template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> matrices_from_json(
    const json& j) {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> out;
  for (const json& m : j) out.push_back(matrix_from_json<Scalar>(m));
  return out;
}

json parse(const std::string& text, const char* format) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("snapshot: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != format) {
    throw IoError(std::string("snapshot: expected format ") + format);
  }
  if (j.value("version", 0) != kVersion) throw IoError("snapshot: unsupported version");
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("snapshot: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("snapshot: cannot write " + path.string());
  out << text;
  if (!out) throw IoError("snapshot: write failed for " + path.string());
}

}  // namespace

std::string env_to_json(const mdp::LinearMdp& env) {
  const mdp::LinearMdpParts& p = env.parts();
  json j;
  j["format"] = kEnvFormat;
  j["version"] = kVersion;
  j["n_states"] = p.n_states;
  j["n_actions"] = p.n_actions;
  j["horizon"] = p.horizon;
  j["n_tasks"] = p.n_tasks;
  j["feature_dim"] = p.feature_dim;
  j["rank"] = p.b_star.empty() ? 0 : p.b_star.front().cols();
  j["psi"] = matrix_to_json(p.psi);
  j["phi"] = matrix_to_json(p.phi);
  j["mu"] = matrices_to_json<double>(p.mu);
  j["theta_star"] = matrices_to_json<double>(p.theta_star);
  j["b_star"] = matrices_to_json<double>(p.b_star);
  j["w_star"] = matrices_to_json<double>(p.w_star);
  j["initial_dist"] = matrix_to_json(p.initial_dist);
  j["grid_side"] = p.grid_side ? json(*p.grid_side) : json(nullptr);
  return j.dump(1);
}

mdp::LinearMdp env_from_json(const std::string& text) {
  const json j = parse(text, kEnvFormat);
  mdp::LinearMdpParts p;
  try {
    p.n_states = j.at("n_states").get<int>();
    p.n_actions = j.at("n_actions").get<int>();
    p.horizon = j.at("horizon").get<int>();
    p.n_tasks = j.at("n_tasks").get<int>();
    p.feature_dim = j.at("feature_dim").get<int>();
    p.psi = matrix_from_json<double>(j.at("psi"));
    p.phi = matrix_from_json<double>(j.at("phi"));
    p.mu = matrices_from_json<double>(j.at("mu"));
    p.theta_star = matrices_from_json<double>(j.at("theta_star"));
    p.b_star = matrices_from_json<double>(j.at("b_star"));
    p.w_star = matrices_from_json<double>(j.at("w_star"));
    const Matrix init = matrix_from_json<double>(j.at("initial_dist"));
    p.initial_dist = Eigen::Map<const Vector>(init.data(), init.size());
    if (!j.at("grid_side").is_null()) p.grid_side = j.at("grid_side").get<int>();
  } catch (const json::exception& e) {
    throw IoError(std::string("snapshot: malformed environment: ") + e.what());
  }
  return mdp::LinearMdp(std::move(p));
}

std::string model_to_json(const planner::EmpiricalModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kVersion;
  j["n_states"] = model.n_states();
  j["n_actions"] = model.n_actions();
  j["horizon"] = model.horizon();
  j["episodes_used"] = model.episodes_used();
  json counts = json::array();
  for (int h = 0; h < model.horizon(); ++h) {
    counts.push_back(matrix_to_json(model.transition_counts(h)));
  }
  j["transition_counts"] = std::move(counts);
  return j.dump(1);
}

planner::EmpiricalModel model_from_json(const std::string& text) {
  const json j = parse(text, kModelFormat);
  try {
    auto counts = matrices_from_json<std::int64_t>(j.at("transition_counts"));
    if (static_cast<int>(counts.size()) != j.at("horizon").get<int>()) {
      throw IoError("snapshot: horizon does not match count tables");
    }
    return planner::EmpiricalModel::from_counts(
        j.at("n_states").get<int>(), j.at("n_actions").get<int>(), std::move(counts),
        j.at("episodes_used").get<std::int64_t>());
  } catch (const json::exception& e) {
    throw IoError(std::string("snapshot: malformed model: ") + e.what());
  }
}

void save_env(const mdp::LinearMdp& env, const std::filesystem::path& path) {
  write_file(path, env_to_json(env));
}

mdp::LinearMdp load_env(const std::filesystem::path& path) {
  return env_from_json(read_file(path));
}

void save_model(const planner::EmpiricalModel& model, const std::filesystem::path& path) {
  write_file(path, model_to_json(model));
}

planner::EmpiricalModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_file(path));
}

}  // namespace mtrl::snapshot
