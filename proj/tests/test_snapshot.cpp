#include <gtest/gtest.h>

#include "mtrl/errors.hpp"
#include "mtrl/snapshot.hpp"

namespace mtrl::snapshot {
namespace {

TEST(EnvJson, RoundTripIsExact) {
  const mdp::LinearMdp env = mdp::gen_experiment1({6, 6, 2, 8, 4, 3}, 1);
  const mdp::LinearMdp back = env_from_json(env_to_json(env));
  EXPECT_EQ(back.psi_table(), env.psi_table());
  EXPECT_EQ(back.phi_table(), env.phi_table());
  for (int h = 0; h < 3; ++h) {
    EXPECT_EQ(back.mu(h), env.mu(h));
    EXPECT_EQ(back.theta_star(h), env.theta_star(h));
    EXPECT_EQ(back.b_star(h), env.b_star(h));
  }
  EXPECT_EQ(env_to_json(back), env_to_json(env));
}

TEST(EnvJson, KeepsGridMetric) {
  const mdp::LinearMdp env = mdp::gen_gridmaze({3, {{2, 2}}, 2});
  const mdp::LinearMdp back = env_from_json(env_to_json(env));
  EXPECT_EQ(back.state_distance(0, 8), 4);
}

TEST(EnvJson, MalformedTextThrowsIoError) {
  EXPECT_THROW(env_from_json("{not json"), IoError);
  EXPECT_THROW(env_from_json("{\"format\": \"something-else\"}"), IoError);
}

TEST(EnvJson, InvalidStoredEnvironmentThrowsInvariantError) {
  const mdp::LinearMdp env = mdp::gen_gridmaze({2, {{1, 1}}, 1});
  std::string text = env_to_json(env);
  // Scale the initial distribution so it no longer sums to one.
  const auto pos = text.find("\"initial_dist\"");
  ASSERT_NE(pos, std::string::npos);
  const auto one = text.find("0.25", pos);
  ASSERT_NE(one, std::string::npos);
  text.replace(one, 4, "0.95");
  EXPECT_THROW(env_from_json(text), InvariantError);
}

TEST(ModelJson, RoundTripKeepsCountsAndEpisodes) {
  planner::EmpiricalModel model(3, 2, 2);
  model.record(0, 1, 1, 2);
  model.record(1, 2, 0, 0);
  model.add_episode();
  const planner::EmpiricalModel back = model_from_json(model_to_json(model));
  EXPECT_EQ(back.episodes_used(), 1);
  for (int h = 0; h < 2; ++h) {
    EXPECT_EQ(back.transition_counts(h), model.transition_counts(h));
    EXPECT_EQ(back.kernel(h), model.kernel(h));
  }
}

}  // namespace
}  // namespace mtrl::snapshot
