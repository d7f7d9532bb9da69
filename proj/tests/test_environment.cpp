// Copyright 2026 The mipp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mipp/error.hpp"
#include "test_util.hpp"

namespace mipp {
namespace {

using testing::small_env;

std::vector<Action> all(int n, Action a) { return std::vector<Action>(n, a); }

TEST(EnvConfigTest, DerivedSizes) {
  const EnvConfig cfg;
  EXPECT_EQ(cfg.lattice_size(), 10);
  EXPECT_EQ(cfg.num_levels(), 3);
  EXPECT_EQ(cfg.map_cells(), 500);
  EXPECT_EQ(cfg.pool_factor(), 50);
  EXPECT_EQ(cfg.pixel_cells(5.0), 1);
  EXPECT_EQ(cfg.pixel_cells(15.0), 3);
  const Vec3 p = cfg.position({0, 0, 2});
  EXPECT_DOUBLE_EQ(p.x, 2.5);
  EXPECT_DOUBLE_EQ(p.y, 2.5);
  EXPECT_DOUBLE_EQ(p.z, 15.0);
}

TEST(EnvConfigTest, ValidateRejectsUnknownSensorAltitude) {
  EnvConfig cfg = small_env();
  cfg.max_altitude = 20.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Actions, NamesRoundTrip) {
  for (Action a : kAllActions) EXPECT_EQ(parse_action(action_name(a)), a);
  EXPECT_THROW(parse_action("sideways"), Error);
}

TEST(InitialPositions, FourAgentsOnTenColumns) {
  EnvConfig cfg = small_env(4);
  const auto pos = initial_positions(cfg);
  ASSERT_EQ(pos.size(), 4u);
  const int expected[] = {1, 3, 6, 8};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(pos[k].col, expected[k]);
    EXPECT_EQ(pos[k].row, 0);
    EXPECT_EQ(pos[k].level, 0);
  }
}

TEST(InitialPositions, TooManyAgentsIsConfigError) {
  try {
    initial_positions(small_env(11));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(Reward, NormalisedEntropyReduction) {
  EXPECT_DOUBLE_EQ(reward(100.0, 75.0, 1.0, 0.0), 0.25);
  EXPECT_DOUBLE_EQ(reward(100.0, 75.0, 2.0, -0.1), 0.4);
  EXPECT_DOUBLE_EQ(reward(0.0, 0.0, 1.0, 0.3), 0.3);
}

TEST(Terrain, FractionWithinBounds) {
  const EnvConfig cfg = small_env();
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(s);
    const double f = generate_terrain(rng, cfg).interesting_fraction();
    EXPECT_GE(f, cfg.terrain_min_fraction - 1e-12);
    EXPECT_LE(f, cfg.terrain_max_fraction + 1e-12);
  }
}

TEST(Terrain, SplitIsHalfPlane) {
  const EnvConfig cfg = small_env();
  const GroundTruthMap gt = split_terrain(cfg, 0.0, 0.0);  // x >= centre
  EXPECT_EQ(gt.at(24, 10), 0);
  EXPECT_EQ(gt.at(25, 10), 1);
  EXPECT_DOUBLE_EQ(gt.interesting_fraction(), 0.5);
}

TEST(Mask, CornerStartForbidsSouthWestAndDown) {
  EnvConfig cfg = small_env(1);
  GlobalState g;
  g.positions = {{0, 0, 0}};
  const ActionMask m = valid_actions(g, cfg, 0);
  EXPECT_TRUE(m[int(Action::kUp)]);
  EXPECT_TRUE(m[int(Action::kNorth)]);
  EXPECT_TRUE(m[int(Action::kEast)]);
  EXPECT_FALSE(m[int(Action::kSouth)]);
  EXPECT_FALSE(m[int(Action::kWest)]);
  EXPECT_FALSE(m[int(Action::kDown)]);
}

TEST(Mask, OccupiedColumnBlocksAllAltitudes) {
  EnvConfig cfg = small_env(2);
  GlobalState g;
  g.positions = {{4, 4, 0}, {5, 4, 2}};
  const ActionMask m = valid_actions(g, cfg, 0);
  EXPECT_FALSE(m[int(Action::kEast)]);
  EXPECT_TRUE(m[int(Action::kWest)]);
  EXPECT_TRUE(m[int(Action::kUp)]);
}

TEST(Step, InvalidActionIsRejected) {
  const EnvConfig cfg = small_env(2);
  const GroundTruthMap gt = split_terrain(cfg, 0.0, 0.0);
  EnvState s = initial_state(cfg, gt, 1);
  try {
    step(s, all(2, Action::kSouth), gt, 1, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStepRejected);
  }
  EXPECT_THROW(step(s, all(1, Action::kNorth), gt, 1, cfg), Error);
}

TEST(Step, BudgetAndTermination) {
  const EnvConfig cfg = small_env(2, 3);
  const GroundTruthMap gt = split_terrain(cfg, 0.3, 1.0);
  EnvState s = initial_state(cfg, gt, 4);
  EXPECT_EQ(s.global.budget, 3);
  for (int t = 1; t <= 3; ++t) {
    const StepOutcome o = step(s, all(2, Action::kNorth), gt, 4, cfg);
    EXPECT_EQ(s.global.budget, 3 - t);
    EXPECT_EQ(o.done, t == 3);
  }
}

TEST(Step, LowerIdWinsSimultaneousConflict) {
  EnvConfig cfg = small_env(2);
  const GroundTruthMap gt = split_terrain(cfg, 0.0, 0.0);
  EnvState s = initial_state(cfg, gt, 2);
  s.global.positions = {{3, 3, 0}, {5, 3, 0}};
  const std::vector<Action> joint = {Action::kEast, Action::kWest};
  const StepOutcome o = step(s, joint, gt, 2, cfg);
  EXPECT_EQ(s.global.positions[0], (LatticePos{4, 3, 0}));
  EXPECT_EQ(s.global.positions[1], (LatticePos{5, 3, 0}));
  EXPECT_FALSE(o.held[0]);
  EXPECT_TRUE(o.held[1]);
}

TEST(Step, RewardMatchesGlobalEntropyChange) {
  const EnvConfig cfg = small_env(3, 4);
  const GroundTruthMap gt = split_terrain(cfg, 1.0, -3.0);
  EnvState s = initial_state(cfg, gt, 8);
  for (int t = 0; t < 4; ++t) {
    const double before = map_entropy(s.global.map, cfg.weights);
    const StepOutcome o = step(s, all(3, Action::kNorth), gt, 8, cfg);
    EXPECT_DOUBLE_EQ(o.entropy_before, before);
    EXPECT_DOUBLE_EQ(o.entropy_after, map_entropy(s.global.map, cfg.weights));
    EXPECT_DOUBLE_EQ(o.reward, (before - o.entropy_after) / before);
  }
}

TEST(Step, DeterministicForFixedNoiseSeed) {
  const EnvConfig cfg = small_env(2, 5);
  const GroundTruthMap gt = split_terrain(cfg, 0.7, 0.0);
  EnvState a = initial_state(cfg, gt, 77), b = initial_state(cfg, gt, 77);
  for (int t = 0; t < 5; ++t) {
    step(a, all(2, Action::kNorth), gt, 77, cfg);
    step(b, all(2, Action::kNorth), gt, 77, cfg);
  }
  EXPECT_EQ(a.global.map, b.global.map);
}

TEST(Communication, OutOfRangeAgentsKeepSeparateMaps) {
  EnvConfig cfg = small_env(2, 2);
  cfg.comm_radius = 1.0;
  const GroundTruthMap gt = split_terrain(cfg, 0.0, 0.0);
  EnvState s = initial_state(cfg, gt, 3);
  EXPECT_TRUE(s.locals[0].in_range.empty());
  EXPECT_NE(s.locals[0].map, s.locals[1].map);
  EXPECT_EQ(s.locals[0].visible_footprints.size(), 1u);
}

TEST(Communication, InfiniteRadiusMatchesGlobalMap) {
  EnvConfig cfg = small_env(3, 4);
  cfg.comm_radius = std::numeric_limits<double>::infinity();
  const GroundTruthMap gt = split_terrain(cfg, 0.4, 0.5);
  EnvState s = initial_state(cfg, gt, 5);
  for (int t = 0; t < 4; ++t) {
    step(s, all(3, Action::kNorth), gt, 5, cfg);
    for (const auto& local : s.locals) {
      EXPECT_EQ(local.map, s.global.map);
      EXPECT_EQ(local.in_range.size(), 2u);
    }
  }
}

TEST(Communication, RangeUsesThreeDimensionalDistance) {
  const std::vector<Vec3> pos = {{0, 0, 5}, {3, 4, 5}, {0, 0, 15}};
  std::vector<Measurement> ms(3);
  const auto inbox = exchange_messages(pos, ms, 5.0);
  ASSERT_EQ(inbox[0].size(), 1u);
  EXPECT_EQ(inbox[0][0].sender, 1);
  EXPECT_TRUE(inbox[2].empty());
}

TEST(Communication, StalePositionsAreKept) {
  EnvConfig cfg = small_env(2, 3);
  cfg.comm_radius = 1.0;
  const GroundTruthMap gt = split_terrain(cfg, 0.0, 0.0);
  EnvState s = initial_state(cfg, gt, 6);
  const LatticePos start1 = s.global.positions[1];
  step(s, all(2, Action::kNorth), gt, 6, cfg);
  EXPECT_EQ(s.locals[0].known_positions[1], start1);
  EXPECT_EQ(s.locals[0].known_positions[0], s.global.positions[0]);
}

TEST(Property, RandomRolloutsKeepInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EnvConfig cfg = small_env(1 + static_cast<int>(seed % 4), 8);
    const GroundTruthMap gt = generate_terrain(rng, cfg);
    EnvState s = initial_state(cfg, gt, seed);
    double prev = map_entropy(s.global.map, cfg.weights);
    bool done = false;
    while (!done) {
      std::vector<Action> joint;
      for (int i = 0; i < cfg.num_agents; ++i) {
        const ActionMask m = valid_actions(s.global, cfg, i);
        std::vector<Action> ok;
        for (Action a : kAllActions)
          if (m[int(a)]) ok.push_back(a);
        joint.push_back(ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)]);
      }
      const StepOutcome o = step(s, joint, gt, seed, cfg);
      done = o.done;
      EXPECT_TRUE(std::isfinite(o.reward));
      EXPECT_DOUBLE_EQ(o.entropy_before, prev);
      prev = o.entropy_after;
      for (int i = 0; i < cfg.num_agents; ++i) {
        for (int j = i + 1; j < cfg.num_agents; ++j)
          EXPECT_FALSE(s.global.positions[i].same_cell_2d(s.global.positions[j]));
      }
      for (double p : s.global.map.cells()) {
        EXPECT_GE(p, OccupancyGrid::kMinProbability);
        EXPECT_LE(p, OccupancyGrid::kMaxProbability);
      }
    }
    EXPECT_EQ(s.global.step, 8);
  }
}

TEST(EpisodeCsv, Header) {
  std::ostringstream os;
  const std::vector<EpisodeLogRow> rows = {{1, 0, {2.5, 2.5, 5.0}, "north", 0.25, 10.0}};
  write_episode_csv(os, rows);
  EXPECT_EQ(os.str(), "step,agent,x,y,z,action,reward,global_entropy\n1,0,2.5,2.5,5,north,0.25,10\n");
}

}  // namespace
}  // namespace mipp
