#include <gtest/gtest.h>

#include "mtrl/config.hpp"
#include "mtrl/errors.hpp"

namespace mtrl::config {
namespace {

TEST(Preset, DeskDefaults) {
  const ExperimentConfig c = preset("desk");
  EXPECT_EQ(c.experiment, Experiment::kSynthetic);
  EXPECT_EQ(c.d, 20);
  EXPECT_EQ(c.T, 20);
  EXPECT_EQ(c.S, 100);
  EXPECT_EQ(c.A, 6);
  EXPECT_EQ(c.H, 5);
  EXPECT_EQ(c.n_trials, 20);
  EXPECT_EQ(c.K_grid, (std::vector<int>{50, 100, 200, 400, 800, 1600}));
  EXPECT_EQ(c.effective_stage1_budget(), 50 * 100 * 6 * 5);
  EXPECT_EQ(c.effective_x_net_size(), 800);
  EXPECT_NO_THROW(validate(c));
}

TEST(Preset, GridMazeDerivesSizesFromGrid) {
  const ExperimentConfig c = preset("gridmaze");
  EXPECT_EQ(c.experiment, Experiment::kGridMaze);
  EXPECT_EQ(c.S, 25);
  EXPECT_EQ(c.A, 4);
  EXPECT_EQ(c.d, 100);
  EXPECT_EQ(c.H, 10);
  EXPECT_EQ(c.goals.size(), 5u);
  EXPECT_EQ(c.K_grid.front(), 10);
  EXPECT_EQ(c.K_grid.back(), 2000);
  EXPECT_EQ(c.K_grid.size(), 200u);
}

TEST(Preset, UnknownNameThrows) { EXPECT_THROW(preset("huge"), ConfigError); }

TEST(ParseConfig, OverridesOnTopOfPreset) {
  const ExperimentConfig c = parse_config(
      "# comment\n"
      "n_trials = 3   # trailing comment\n"
      "K_grid = 10, 20, 40\n"
      "methods = mtrl, random\n"
      "seeds = 1, 2, 3\n");
  EXPECT_EQ(c.n_trials, 3);
  EXPECT_EQ(c.K_grid, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(c.methods, (std::vector<std::string>{"mtrl", "random"}));
  EXPECT_EQ(c.trial_seed(2), 3u);
  EXPECT_EQ(c.d, 20);
}

TEST(ParseConfig, RangeFormForKGrid) {
  const ExperimentConfig c = parse_config("K_grid = 10:50:20\n");
  EXPECT_EQ(c.K_grid, (std::vector<int>{10, 30, 50}));
}

TEST(ParseConfig, GoalsSelectGridMaze) {
  const ExperimentConfig c = parse_config("experiment = gridmaze\nside = 4\nr = 1\ngoals = 1,1; 4,4\n");
  EXPECT_EQ(c.experiment, Experiment::kGridMaze);
  EXPECT_EQ(c.S, 16);
  EXPECT_EQ(c.d, 64);
  EXPECT_EQ(c.T, 2);
  EXPECT_EQ(c.goals[1], std::make_pair(4, 4));
}

TEST(ParseConfig, ContradictingMazeSizeThrows) {
  EXPECT_THROW(parse_config("experiment = gridmaze\nS = 30\n"), ConfigError);
}

TEST(ParseConfig, UnknownKeyThrowsWithLineNumber) {
  try {
    parse_config("d = 10\nlearning_rate = 0.1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseConfig, RepeatedKeyThrows) { EXPECT_THROW(parse_config("d = 10\nd = 12\n"), ConfigError); }

TEST(ParseConfig, MalformedValuesThrow) {
  EXPECT_THROW(parse_config("d = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("xi = \n"), ConfigError);
  EXPECT_THROW(parse_config("sampled_regret = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
}

TEST(Validate, RejectsRankAboveHalfMinimum) {
  EXPECT_THROW(parse_config("r = 11\n"), ConfigError);
}

TEST(Validate, RejectsUnsortedGrid) { EXPECT_THROW(parse_config("K_grid = 20, 10\n"), ConfigError); }

TEST(Validate, RejectsUnknownMethod) {
  EXPECT_THROW(parse_config("methods = mtrl, ucb\n"), ConfigError);
}

TEST(Validate, RejectsSeedCountMismatch) {
  EXPECT_THROW(parse_config("n_trials = 3\nseeds = 1, 2\n"), ConfigError);
}

TEST(Validate, RejectsGoalOffGrid) {
  EXPECT_THROW(parse_config("experiment = gridmaze\ngoals = 1,1; 6,6\n"), ConfigError);
}

TEST(ToText, RoundTrips) {
  for (const char* name : {"desk", "full", "gridmaze"}) {
    const ExperimentConfig c = preset(name);
    const ExperimentConfig back = parse_config(to_text(c));
    EXPECT_EQ(to_text(back), to_text(c)) << name;
  }
}

TEST(TrialSeed, DerivedSeedsDifferAndRepeat) {
  const ExperimentConfig c = preset("desk");
  EXPECT_NE(c.trial_seed(0), c.trial_seed(1));
  EXPECT_EQ(c.trial_seed(5), preset("desk").trial_seed(5));
}

}  // namespace
}  // namespace mtrl::config
