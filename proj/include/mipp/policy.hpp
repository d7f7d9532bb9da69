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

// Feature planes and the convolutional actor/critic networks.
//
// All planes live on the G x G planning lattice (plane[c][row][col], southern
// row first). Map-derived planes are mean-pooled over the r_P / r_M block of
// map cells under each lattice cell.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mipp/environment.hpp"
#include "mipp/tensor.hpp"

namespace mipp {

enum class Plane : int {
  kPositionMap = 0,       // (a) agent-centred positions, -1 outside the map
  kMapState,              // (b) local belief
  kEntropyMap,            // (c) weighted entropy of the local belief
  kMeasurementEntropy,    // (d) weighted entropy of the latest own measurement
  kFootprintMap,          // (e) fields of view of in-range agents
  kAgentId,               // constant i / N
  kBudget,                // constant b / B
  kGlobalPositionMap,     // (f)
  kGlobalMapState,        // (g)
  kGlobalEntropyMap,      // (h)
  kGlobalFootprintMap,    // (i)
  kOtherActions,          // (j) one-hot action planes per other agent
};

inline constexpr int kNumPlaneKinds = 12;

std::string_view plane_name(Plane p);
Plane parse_plane(std::string_view name);  // usage error on unknown names

struct FeatureConfig {
  std::array<bool, kNumPlaneKinds> enabled{true, true, true, true, true, true,
                                           true, true, true, true, true, true};

  bool on(Plane p) const { return enabled[static_cast<int>(p)]; }
  void set(Plane p, bool value) { enabled[static_cast<int>(p)] = value; }
};

// Which critic input a training variant consumes.
enum class CriticInput {
  kFull,       // actor planes + global planes + other agents' actions
  kNoActions,  // actor planes + global planes
  kLocal,      // actor planes only
};

struct FeatureStack {
  nn::Tensor planes;  // [K, G, G]
  std::vector<std::string> manifest;

  std::size_t channels() const { return manifest.size(); }
};

std::vector<std::string> actor_manifest(const FeatureConfig& fc);
std::vector<std::string> critic_manifest(const FeatureConfig& fc, int num_agents,
                                         CriticInput input);

FeatureStack build_actor_features(const AgentLocalState& local, const EnvConfig& cfg,
                                  const FeatureConfig& fc);

// other_actions lists the other agents' actions ordered by id, skipping the
// agent itself.
FeatureStack build_critic_features(const GlobalState& global, const AgentLocalState& local,
                                   std::span<const Action> other_actions,
                                   const EnvConfig& cfg, const FeatureConfig& fc,
                                   CriticInput input = CriticInput::kFull);

struct NetArchitecture {
  std::vector<int> conv_channels{16, 32, 32};
  std::vector<int> conv_strides{1, 1, 2};
  int kernel = 3;
  std::vector<int> mlp_hidden{128, 64};

  void validate() const;
};

// Convolutional encoder (same padding, relu) followed by a relu MLP head and
// a linear output layer.
class ConvNet {
 public:
  ConvNet() = default;
  ConvNet(int in_channels, int grid, int outputs, NetArchitecture arch, Rng& rng);

  int in_channels() const { return in_channels_; }
  int grid() const { return grid_; }
  int outputs() const { return outputs_; }
  const NetArchitecture& architecture() const { return arch_; }

  // input: [B, C, G, G] -> [B, outputs]
  nn::Var forward(const nn::Var& input) const;
  std::vector<double> forward_one(const nn::Tensor& planes) const;

  const std::vector<nn::Var>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  void zero_grad();

  // Deep copy of parameter values into this network (shapes must match).
  void copy_from(const ConvNet& other);
  ConvNet clone() const;

  void append_to(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static ConvNet from_checkpoint(const nn::Checkpoint& ckpt, const std::string& prefix);

 private:
  void add_param(std::string name, nn::Tensor value);

  int in_channels_ = 0;
  int grid_ = 0;
  int outputs_ = 0;
  NetArchitecture arch_;
  std::vector<nn::Var> params_;
  std::vector<std::string> names_;
};

std::array<double, kNumActions> actor_forward(const ConvNet& actor, const FeatureStack& features,
                                              const ActionMask& mask, double eps);

std::array<double, kNumActions> critic_forward(const ConvNet& critic,
                                               const FeatureStack& features);

std::vector<std::uint8_t> mask_bytes(const ActionMask& mask);

}  // namespace mipp
