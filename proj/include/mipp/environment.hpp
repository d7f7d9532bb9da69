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

// Multi-agent terrain monitoring decision process.
//
// Agents move on a 3D lattice of planning cells (side r_P) stacked over a
// finite set of altitudes. Every step all agents move at once, measure,
// exchange measurements with teammates in communication range, and fuse what
// they saw into their local maps. A global map fuses everything and drives the
// team reward.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mipp/gridmap.hpp"
#include "mipp/random.hpp"

namespace mipp {

enum class Action : int { kUp = 0, kNorth, kEast, kSouth, kWest, kDown };

inline constexpr int kNumActions = 6;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kUp, Action::kNorth, Action::kEast, Action::kSouth, Action::kWest, Action::kDown};

std::string_view action_name(Action a);
Action parse_action(std::string_view name);

using ActionMask = std::array<bool, kNumActions>;

struct LatticePos {
  int col = 0;
  int row = 0;
  int level = 0;  // 0 is the minimum altitude

  bool same_cell_2d(const LatticePos& o) const { return col == o.col && row == o.row; }
  friend bool operator==(const LatticePos&, const LatticePos&) = default;
};

LatticePos apply(Action a, const LatticePos& p);

struct EnvConfig {
  double terrain_side = 50.0;        // meters
  double map_resolution = 0.1;       // r_M, meters per map cell
  double planning_resolution = 5.0;  // r_P, meters per lattice cell
  double min_altitude = 5.0;
  double max_altitude = 15.0;
  double altitude_step = 5.0;
  int num_agents = 4;
  int budget = 15;
  double comm_radius = 25.0;  // infinity means all-to-all
  SensorModel sensor = SensorModel::defaults();
  ImportanceWeights weights;
  double reward_alpha = 1.0;
  double reward_beta = 0.0;
  double footprint_factor = 1.0;
  double terrain_min_fraction = 0.3;
  double terrain_max_fraction = 0.6;

  void validate() const;

  int lattice_size() const;  // lattice columns == rows
  int num_levels() const;
  int map_cells() const;    // map cells per side
  int pool_factor() const;  // map cells per lattice cell side

  double altitude(int level) const { return min_altitude + level * altitude_step; }
  Vec3 position(const LatticePos& p) const;
  int pixel_cells(double altitude) const;
};

struct GlobalState {
  OccupancyGrid map;
  std::vector<LatticePos> positions;
  std::vector<CellRect> footprints;  // current field of view per agent
  int budget = 0;
  int step = 0;
};

struct AgentLocalState {
  int id = 0;
  OccupancyGrid map;
  LatticePos position;
  std::vector<LatticePos> known_positions;  // indexed by agent id, stale allowed
  int budget = 0;
  int num_agents = 0;
  std::optional<Measurement> last_measurement;
  std::vector<int> in_range;                 // senders heard this step
  std::vector<CellRect> visible_footprints;  // own + in-range footprints
};

struct EnvState {
  GlobalState global;
  std::vector<AgentLocalState> locals;
};

struct CommMessage {
  int sender = 0;
  Vec3 position;
  const Measurement* measurement = nullptr;  // owned by the caller
};

ImportanceWeights make_weights(double w1);

GroundTruthMap split_terrain(const EnvConfig& cfg, double angle, double offset);

// Random half-plane split whose interesting fraction lies in the configured
// range.
GroundTruthMap generate_terrain(Rng& rng, const EnvConfig& cfg);

std::vector<LatticePos> initial_positions(const EnvConfig& cfg);

EnvState initial_state(const EnvConfig& cfg, const GroundTruthMap& terrain,
                       std::uint64_t noise_seed);

ActionMask valid_actions(const GlobalState& state, const EnvConfig& cfg, int agent);

// inbox[k] holds one message per sender within 3D distance `radius` of k.
std::vector<std::vector<CommMessage>> exchange_messages(
    std::span<const Vec3> positions, std::span<const Measurement> measurements,
    double radius);

double reward(double entropy_before, double entropy_after, double alpha, double beta);

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  std::vector<bool> held;  // agents that lost a simultaneous-move tie-break
};

StepOutcome step(EnvState& state, std::span<const Action> joint_action,
                 const GroundTruthMap& terrain, std::uint64_t noise_seed,
                 const EnvConfig& cfg);

struct EpisodeLogRow {
  int step = 0;
  int agent = 0;
  Vec3 position;
  std::string action;
  double reward = 0.0;
  double global_entropy = 0.0;
};

void write_episode_csv(std::ostream& os, std::span<const EpisodeLogRow> rows);

}  // namespace mipp
