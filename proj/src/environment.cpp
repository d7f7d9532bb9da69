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

#include "mipp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mipp/error.hpp"

namespace mipp {
namespace {

bool is_multiple(double value, double unit) {
  const double q = value / unit;
  return std::abs(q - std::round(q)) < 1e-6;
}

std::string describe(const LatticePos& p) {
  std::ostringstream os;
  os << '(' << p.col << ", " << p.row << ", " << p.level << ')';
  return os.str();
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kUp: return "up";
    case Action::kNorth: return "north";
    case Action::kEast: return "east";
    case Action::kSouth: return "south";
    case Action::kWest: return "west";
    case Action::kDown: return "down";
  }
  return "?";
}

Action parse_action(std::string_view name) {
  for (Action a : kAllActions) {
    if (action_name(a) == name) return a;
  }
  fail(ErrorKind::kParse, "unknown action '" + std::string(name) + "'");
}

LatticePos apply(Action a, const LatticePos& p) {
  LatticePos q = p;
  switch (a) {
    case Action::kUp: ++q.level; break;
    case Action::kNorth: ++q.row; break;
    case Action::kEast: ++q.col; break;
    case Action::kSouth: --q.row; break;
    case Action::kWest: --q.col; break;
    case Action::kDown: --q.level; break;
  }
  return q;
}

void EnvConfig::validate() const {
  require(terrain_side > 0.0 && map_resolution > 0.0 && planning_resolution > 0.0,
          ErrorKind::kConfig, "terrain side and resolutions must be positive");
  require(is_multiple(terrain_side, planning_resolution), ErrorKind::kConfig,
          "terrain side must be divisible by the planning resolution");
  require(is_multiple(terrain_side, map_resolution), ErrorKind::kConfig,
          "terrain side must be divisible by the map resolution");
  require(is_multiple(planning_resolution, map_resolution), ErrorKind::kConfig,
          "planning resolution must be a multiple of the map resolution");
  require(min_altitude > 0.0 && altitude_step > 0.0 && max_altitude >= min_altitude,
          ErrorKind::kConfig, "altitude range must be positive and ordered");
  require(is_multiple(max_altitude - min_altitude, altitude_step), ErrorKind::kConfig,
          "altitudes must form an arithmetic grid");
  require(num_agents >= 1, ErrorKind::kConfig, "need at least one agent");
  require(budget >= 1, ErrorKind::kConfig, "budget must be >= 1");
  require(comm_radius >= 0.0, ErrorKind::kConfig, "communication radius must be >= 0");
  require(footprint_factor > 0.0, ErrorKind::kConfig, "footprint factor must be positive");
  require(terrain_min_fraction >= 0.0 && terrain_min_fraction <= terrain_max_fraction &&
              terrain_max_fraction <= 1.0,
          ErrorKind::kConfig, "terrain fraction range must satisfy 0 <= min <= max <= 1");
  weights.validate();
  for (int l = 0; l < num_levels(); ++l) {
    if (!sensor.has_altitude(altitude(l))) sensor.accuracy(altitude(l));  // throws
  }
}

int EnvConfig::lattice_size() const {
  return static_cast<int>(std::lround(terrain_side / planning_resolution));
}

int EnvConfig::num_levels() const {
  return static_cast<int>(std::lround((max_altitude - min_altitude) / altitude_step)) + 1;
}

int EnvConfig::map_cells() const {
  return static_cast<int>(std::lround(terrain_side / map_resolution));
}

int EnvConfig::pool_factor() const {
  return static_cast<int>(std::lround(planning_resolution / map_resolution));
}

Vec3 EnvConfig::position(const LatticePos& p) const {
  return {(p.col + 0.5) * planning_resolution, (p.row + 0.5) * planning_resolution,
          altitude(p.level)};
}

int EnvConfig::pixel_cells(double alt) const {
  return std::max(1, static_cast<int>(std::lround(alt / min_altitude)));
}

ImportanceWeights make_weights(double w1) { return ImportanceWeights::from_interesting(w1); }

GroundTruthMap split_terrain(const EnvConfig& cfg, double angle, double offset) {
  const int n = cfg.map_cells();
  const double r = cfg.map_resolution;
  GroundTruthMap gt(n, n, r);
  const double c = std::cos(angle), s = std::sin(angle);
  const double half = n * r / 2.0;
  for (int y = 0; y < n; ++y) {
    const double yc = (y + 0.5) * r - half;
    for (int x = 0; x < n; ++x) {
      const double xc = (x + 0.5) * r - half;
      gt.set(x, y, xc * c + yc * s >= offset);
    }
  }
  return gt;
}

GroundTruthMap generate_terrain(Rng& rng, const EnvConfig& cfg) {
  const int n = cfg.map_cells();
  const double r = cfg.map_resolution;
  const double half = n * r / 2.0;
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> frac_dist(cfg.terrain_min_fraction,
                                                   cfg.terrain_max_fraction);
  std::vector<double> proj(static_cast<std::size_t>(n) * n);
  double best_angle = 0.0, best_offset = 0.0, best_err = 2.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double angle = angle_dist(rng);
    const double target = frac_dist(rng);
    const double c = std::cos(angle), s = std::sin(angle);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        proj[static_cast<std::size_t>(y) * n + x] = ((x + 0.5) * r - half) * c +
                                                     ((y + 0.5) * r - half) * s;
      }
    }
    auto fraction = [&](double offset) {
      std::size_t count = 0;
      for (double v : proj) count += v >= offset;
      return static_cast<double>(count) / proj.size();
    };
    // The interesting fraction is non-increasing in the offset.
    double lo = -2.0 * half, hi = 2.0 * half;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fraction(mid) > target ? lo : hi) = mid;
    }
    const double f = fraction(hi);
    const double err = f < cfg.terrain_min_fraction   ? cfg.terrain_min_fraction - f
                       : f > cfg.terrain_max_fraction ? f - cfg.terrain_max_fraction
                                                      : 0.0;
    if (err < best_err) {
      best_err = err;
      best_angle = angle;
      best_offset = hi;
    }
    if (err == 0.0) break;
  }
  return split_terrain(cfg, best_angle, best_offset);
}

std::vector<LatticePos> initial_positions(const EnvConfig& cfg) {
  const int cols = cfg.lattice_size();
  const int n = cfg.num_agents;
  require(n <= cols, ErrorKind::kConfig,
          std::to_string(n) + " agents do not fit on a southern edge of " +
              std::to_string(cols) + " lattice cells");
  std::vector<LatticePos> out;
  for (int k = 0; k < n; ++k) out.push_back({(2 * k + 1) * cols / (2 * n), 0, 0});
  return out;
}

std::vector<std::vector<CommMessage>> exchange_messages(
    std::span<const Vec3> positions, std::span<const Measurement> measurements,
    double radius) {
  require(positions.size() == measurements.size(), ErrorKind::kContract,
          "one measurement per agent is required");
  const std::size_t n = positions.size();
  std::vector<std::vector<CommMessage>> inbox(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      if (distance(positions[i], positions[k]) <= radius) {
        inbox[k].push_back({static_cast<int>(i), positions[i], &measurements[i]});
      }
    }
  }
  return inbox;
}

double reward(double entropy_before, double entropy_after, double alpha, double beta) {
  if (!(entropy_before > 0.0)) return beta;
  return alpha * (entropy_before - entropy_after) / entropy_before + beta;
}

ActionMask valid_actions(const GlobalState& state, const EnvConfig& cfg, int agent) {
  require(agent >= 0 && agent < static_cast<int>(state.positions.size()),
          ErrorKind::kContract, "unknown agent " + std::to_string(agent));
  const int size = cfg.lattice_size();
  const int levels = cfg.num_levels();
  ActionMask mask{};
  for (Action a : kAllActions) {
    const LatticePos t = apply(a, state.positions[agent]);
    bool ok = t.col >= 0 && t.col < size && t.row >= 0 && t.row < size && t.level >= 0 &&
              t.level < levels;
    for (int j = 0; ok && j < static_cast<int>(state.positions.size()); ++j) {
      if (j != agent && state.positions[j].same_cell_2d(t)) ok = false;
    }
    mask[static_cast<int>(a)] = ok;
  }
  require(std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }),
          ErrorKind::kContract, "agent " + std::to_string(agent) + " has no valid action");
  return mask;
}

namespace {

// Measures at the current positions, fuses into the global map and every
// local map, and refreshes communication bookkeeping.
void observe(EnvState& state, const GroundTruthMap& terrain, std::uint64_t noise_seed,
             const EnvConfig& cfg, int t) {
  GlobalState& g = state.global;
  const std::size_t n = g.positions.size();
  std::vector<Vec3> where(n);
  std::vector<Measurement> ms;
  ms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    where[i] = cfg.position(g.positions[i]);
    ms.push_back(simulate_measurement(
        terrain, where[i], cfg.sensor, cfg.footprint_factor, cfg.pixel_cells(where[i].z),
        NoiseKey{noise_seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)}));
  }
  g.footprints.clear();
  for (const Measurement& m : ms) {
    g.footprints.push_back(m.footprint);
    fuse_measurement(g.map, m);
  }
  auto inbox = exchange_messages(where, ms, cfg.comm_radius);
  for (std::size_t k = 0; k < n; ++k) {
    AgentLocalState& local = state.locals[k];
    local.position = g.positions[k];
    local.budget = g.budget;
    local.known_positions[k] = g.positions[k];
    local.in_range.clear();
    std::vector<bool> heard(n, false);
    heard[k] = true;
    for (const CommMessage& msg : inbox[k]) {
      heard[msg.sender] = true;
      local.in_range.push_back(msg.sender);
      local.known_positions[msg.sender] = g.positions[msg.sender];
    }
    // Fixed id order keeps fusion results independent of who sent what.
    local.visible_footprints.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (!heard[i]) continue;
      fuse_measurement(local.map, ms[i]);
      local.visible_footprints.push_back(ms[i].footprint);
    }
    local.last_measurement = ms[k];
  }
}

}  // namespace

EnvState initial_state(const EnvConfig& cfg, const GroundTruthMap& terrain,
                       std::uint64_t noise_seed) {
  cfg.validate();
  const int cells = cfg.map_cells();
  require(terrain.width() == cells && terrain.height() == cells, ErrorKind::kConfig,
          "terrain is " + std::to_string(terrain.width()) + "x" +
              std::to_string(terrain.height()) + " cells but the configuration expects " +
              std::to_string(cells) + "x" + std::to_string(cells));
  EnvState state;
  GlobalState& g = state.global;
  g.map = OccupancyGrid(cells, cells, cfg.map_resolution);
  g.positions = initial_positions(cfg);
  g.budget = cfg.budget;
  g.step = 0;
  const int n = cfg.num_agents;
  for (int i = 0; i < n; ++i) {
    AgentLocalState local;
    local.id = i;
    local.map = g.map;
    local.position = g.positions[i];
    local.known_positions = g.positions;
    local.budget = g.budget;
    local.num_agents = n;
    state.locals.push_back(std::move(local));
  }
  observe(state, terrain, noise_seed, cfg, 0);
  return state;
}

StepOutcome step(EnvState& state, std::span<const Action> joint_action,
                 const GroundTruthMap& terrain, std::uint64_t noise_seed,
                 const EnvConfig& cfg) {
  GlobalState& g = state.global;
  const int n = static_cast<int>(g.positions.size());
  require(static_cast<int>(joint_action.size()) == n, ErrorKind::kStepRejected,
          "joint action has " + std::to_string(joint_action.size()) + " entries for " +
              std::to_string(n) + " agents");
  require(g.budget > 0, ErrorKind::kStepRejected, "budget exhausted");
  for (int i = 0; i < n; ++i) {
    const ActionMask mask = valid_actions(g, cfg, i);
    if (!mask[static_cast<int>(joint_action[i])]) {
      fail(ErrorKind::kStepRejected,
           "agent " + std::to_string(i) + " cannot move " +
               std::string(action_name(joint_action[i])) + " from " +
               describe(g.positions[i]));
    }
  }

  StepOutcome out;
  out.held.assign(n, false);
  std::vector<LatticePos> next(n);
  for (int i = 0; i < n; ++i) {
    const LatticePos target = apply(joint_action[i], g.positions[i]);
    bool taken = false;
    for (int j = 0; j < i && !taken; ++j) taken = next[j].same_cell_2d(target);
    out.held[i] = taken;
    next[i] = taken ? g.positions[i] : target;
  }
  g.positions = std::move(next);
  g.budget -= 1;
  g.step += 1;

  out.entropy_before = map_entropy(g.map, cfg.weights);
  observe(state, terrain, noise_seed, cfg, g.step);
  out.entropy_after = map_entropy(g.map, cfg.weights);
  out.reward = reward(out.entropy_before, out.entropy_after, cfg.reward_alpha, cfg.reward_beta);
  out.done = g.budget == 0;
  return out;
}

void write_episode_csv(std::ostream& os, std::span<const EpisodeLogRow> rows) {
  os << "step,agent,x,y,z,action,reward,global_entropy\n";
  os << std::setprecision(17);
  for (const EpisodeLogRow& r : rows) {
    os << r.step << ',' << r.agent << ',' << r.position.x << ',' << r.position.y << ','
       << r.position.z << ',' << r.action << ',' << r.reward << ',' << r.global_entropy
       << '\n';
  }
}

}  // namespace mipp
