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

// Per-agent action selection: uniform random, stripe coverage, greedy
// expected-entropy reduction, and a wrapper around a trained actor.
//
// Planner instances belong to one agent for one mission.

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mipp/environment.hpp"
#include "mipp/policy.hpp"
#include "mipp/random.hpp"

namespace mipp {

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string_view name() const = 0;
  // Returns an action allowed by `mask`.
  virtual Action act(const AgentLocalState& local, const ActionMask& mask) = 0;
};

enum class PlannerKind { kRandom, kCoverage, kGreedyIg, kLearned };

std::string_view planner_kind_name(PlannerKind k);
PlannerKind parse_planner_kind(std::string_view name);  // usage error when unknown

enum class SampleMode { kSample, kArgmax };

struct PlannerSpec {
  PlannerKind kind = PlannerKind::kRandom;
  double coverage_altitude = 10.0;
  // Learned planner only.
  std::shared_ptr<const ConvNet> actor;
  FeatureConfig features;
  SampleMode mode = SampleMode::kSample;

  std::string label() const;
};

std::unique_ptr<Planner> make_planner(const PlannerSpec& spec, const EnvConfig& cfg, int agent,
                                      std::uint64_t seed);

Action first_valid(const ActionMask& mask);  // contract error on an empty mask

Action random_action(const ActionMask& mask, Rng& rng);

// Coverage stripe [first, last] of lattice columns owned by `agent`.
struct Stripe {
  int first = 0;
  int last = -1;
};
Stripe coverage_stripe(int lattice_size, int num_agents, int agent);

// Waypoints of the boustrophedon sweep starting at the southern corner of the
// stripe closest to `start` (west on ties).
std::vector<LatticePos> coverage_route(const Stripe& stripe, int rows, int level,
                                       const LatticePos& start);

// Expected drop of weighted entropy over `region` if one measurement with the
// given accuracy observes each cell independently.
double expected_entropy_reduction(const OccupancyGrid& map, const CellRect& region,
                                  double accuracy, const ImportanceWeights& w);

// Expected reduction per action, or nullopt for masked actions.
std::array<std::optional<double>, kNumActions> greedy_scores(const AgentLocalState& local,
                                                             const ActionMask& mask,
                                                             const EnvConfig& cfg);

Action greedy_ig_action(const AgentLocalState& local, const ActionMask& mask,
                        const EnvConfig& cfg);

// Picks from bounded-softmax probabilities with eps = 0.
Action learned_action(const ConvNet& actor, const FeatureStack& features, const ActionMask& mask,
                      SampleMode mode, Rng& rng);

// Index drawn from a probability vector with a single uniform variate.
int sample_index(std::span<const double> probabilities, double u);

}  // namespace mipp
