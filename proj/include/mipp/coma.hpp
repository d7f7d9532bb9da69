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

// Counterfactual multi-agent actor-critic training and its credit-assignment
// variants.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mipp/environment.hpp"
#include "mipp/policy.hpp"
#include "mipp/tensor.hpp"

namespace mipp {

enum class Variant { kComa, kCentralQV, kActorIndependent, kDecentralised };

std::string_view variant_name(Variant v);  // coma, central-qv, actor-independent, decentralised
Variant parse_variant(std::string_view name);  // usage error when unknown

// Critic input consumed by the Q network of a variant.
CriticInput critic_input(Variant v);

struct TrainConfig {
  Variant variant = Variant::kComa;
  int missions = 10000;
  int rollout_block = 3000;  // interactions collected per optimisation round
  int epochs = 5;
  int batch = 600;
  double actor_lr = 1e-5;
  double critic_lr = 1e-4;
  double lambda = 0.8;
  double gamma = 0.99;
  int target_interval = 30000;  // interactions between target-critic copies
  double eps_start = 0.5;
  double eps_end = 0.02;
  int eps_anneal_missions = 10000;
  bool count_agent_decisions = true;  // false counts one interaction per env step
  double grad_clip = 10.0;
  int checkpoint_every = 0;  // blocks; 0 writes only the final checkpoint
  bool log_wallclock = false;
  NetArchitecture arch;
  FeatureConfig features;

  void validate() const;
  double epsilon(int missions_done) const;
  int interactions_per_mission(const EnvConfig& env) const;
};

struct Transition {
  nn::Tensor features;  // full critic stack; the actor planes come first
  Action action = Action::kUp;
  ActionMask mask{};
  std::array<double, kNumActions> policy{};  // behaviour distribution incl. epsilon
  double epsilon = 0.0;
  double reward = 0.0;
  bool terminal = false;
  int mission = 0;
  int step = 0;
  int agent = 0;
};

// Forward-view lambda-return. q_taken[t] is the target-critic value of the
// action taken at step t; the last step is terminal.
std::vector<double> td_lambda_targets(std::span<const double> rewards,
                                      std::span<const double> q_taken, double lambda,
                                      double gamma);

// Q(u) minus the policy-weighted mean of Q.
double counterfactual_advantage(std::span<const double> q, std::span<const double> policy,
                                Action taken);

struct AdvantageInputs {
  std::span<const double> q;
  std::span<const double> policy;
  Action taken = Action::kUp;
  std::optional<double> value;  // V(s), needed by CentralQV
};

double advantage_variant(Variant v, const AdvantageInputs& in);

// Channel counts of the actor, Q-critic and (CentralQV) value inputs.
struct InputLayout {
  int actor = 0;
  int full = 0;
  int critic = 0;
  int value = 0;  // 0 when the variant has no value network
};

InputLayout input_layout(const FeatureConfig& fc, int num_agents, Variant v);

// Stacks the first `channels` planes of the selected transitions into
// [B, channels, G, G].
nn::Tensor stack_inputs(std::span<const Transition> data, std::span<const std::size_t> index,
                        int channels);

// One Adam step on mean(-log pi(u) * A); returns the loss.
double actor_update(ConvNet& actor, nn::Adam& opt, const nn::Tensor& inputs,
                    std::span<const std::uint8_t> masks, std::span<const double> eps,
                    std::span<const int> actions, std::span<const double> advantages,
                    double grad_clip);

// One Adam step on mean((Q(s, u) - target)^2); an empty `actions` regresses
// the single output instead. Returns the loss.
double critic_update(ConvNet& critic, nn::Adam& opt, const nn::Tensor& inputs,
                     std::span<const int> actions, std::span<const double> targets,
                     double grad_clip);

struct ComaNetworks {
  ConvNet actor;
  ConvNet critic;
  ConvNet target;
  std::optional<ConvNet> value;
};

ComaNetworks make_networks(const EnvConfig& env, const TrainConfig& cfg, Rng& rng);

struct BlockLog {
  int block = 0;
  int missions_done = 0;
  std::int64_t interactions = 0;
  double mean_return = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double epsilon = 0.0;
  double wallclock_s = 0.0;
};

struct MissionRollout {
  std::vector<Transition> transitions;  // agent-major within each step
  double total_return = 0.0;
};

// One on-policy mission with the given exploration rate.
MissionRollout collect_mission(const ConvNet& actor, const EnvConfig& env,
                               const TrainConfig& cfg, int mission, std::uint64_t seed,
                               double eps);

struct TrainOutputs {
  std::ostream* log = nullptr;       // training_log.csv
  std::ostream* missions = nullptr;  // missions.csv
  std::function<void(const std::string& name, const nn::Checkpoint&)> on_checkpoint;
  std::vector<std::pair<std::string, std::string>> metadata;  // copied into checkpoints
  int threads = 1;
  std::function<void(const BlockLog&)> on_block;
};

struct TrainResult {
  ComaNetworks nets;
  ConvNet initial_actor;
  std::vector<BlockLog> blocks;
  std::vector<double> mission_returns;
};

TrainResult train(const EnvConfig& env, const TrainConfig& cfg, std::uint64_t seed,
                  const TrainOutputs& outputs = {});

nn::Checkpoint make_checkpoint(const ComaNetworks& nets, const EnvConfig& env,
                               const TrainConfig& cfg,
                               std::span<const std::pair<std::string, std::string>> metadata);

struct LoadedActor {
  ConvNet actor;
  FeatureConfig features;
};

// Reads the "actor" network and its plane manifest from a training checkpoint.
LoadedActor load_actor(const nn::Checkpoint& ckpt);

void write_training_log_header(std::ostream& os);
void write_training_log_row(std::ostream& os, const BlockLog& row);

}  // namespace mipp
