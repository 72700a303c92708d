#pragma once

#include <filesystem>
#include <string>

#include "mtrl/linear_mdp.hpp"
#include "mtrl/planner.hpp"

namespace mtrl::snapshot {

/// JSON text with fields in declaration order: format tag, version, sizes,
/// psi, phi, mu, theta_star, b_star, w_star, initial_dist, grid_side.
/// Matrices are {"rows", "cols", "data"} with row-major data.
std::string env_to_json(const mdp::LinearMdp& env);
/// Parses and re-validates; throws IoError on malformed text and
/// InvariantError if the stored environment breaks an invariant.
mdp::LinearMdp env_from_json(const std::string& text);

std::string model_to_json(const planner::EmpiricalModel& model);
planner::EmpiricalModel model_from_json(const std::string& text);

void save_env(const mdp::LinearMdp& env, const std::filesystem::path& path);
mdp::LinearMdp load_env(const std::filesystem::path& path);
void save_model(const planner::EmpiricalModel& model, const std::filesystem::path& path);
planner::EmpiricalModel load_model(const std::filesystem::path& path);

}  // namespace mtrl::snapshot
