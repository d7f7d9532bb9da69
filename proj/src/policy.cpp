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

#include "mipp/policy.hpp"

#include <algorithm>
#include <sstream>

#include "mipp/error.hpp"

namespace mipp {
namespace {

constexpr std::array<std::string_view, kNumPlaneKinds> kPlaneNames = {
    "position_map",        "map_state",           "entropy_map",
    "measurement_entropy", "footprint_map",       "agent_id",
    "budget",              "global_position_map", "global_map_state",
    "global_entropy_map",  "global_footprint_map", "other_actions"};

constexpr std::array<Plane, 7> kActorPlanes = {
    Plane::kPositionMap,  Plane::kMapState, Plane::kEntropyMap, Plane::kMeasurementEntropy,
    Plane::kFootprintMap, Plane::kAgentId,  Plane::kBudget};

constexpr std::array<Plane, 4> kGlobalPlanes = {Plane::kGlobalPositionMap,
                                                Plane::kGlobalMapState,
                                                Plane::kGlobalEntropyMap,
                                                Plane::kGlobalFootprintMap};

struct PlaneWriter {
  int g;
  std::vector<double> data;
  std::vector<std::string> names;

  double* add(std::string name) {
    names.push_back(std::move(name));
    data.resize(data.size() + static_cast<std::size_t>(g) * g, 0.0);
    return data.data() + data.size() - static_cast<std::size_t>(g) * g;
  }

  FeatureStack finish() {
    const std::size_t k = names.size();
    return {nn::Tensor({k, static_cast<std::size_t>(g), static_cast<std::size_t>(g)},
                       std::move(data)),
            std::move(names)};
  }
};

void check_resolutions(const EnvConfig& cfg, const OccupancyGrid& map) {
  const int g = cfg.lattice_size();
  const int f = cfg.pool_factor();
  require(f >= 1 && g * f == map.width() && g * f == map.height(), ErrorKind::kConfig,
          "map of " + std::to_string(map.width()) + " cells is not divisible into " +
              std::to_string(g) + " planning cells");
}

// Mean of value(x, y) over each f x f block.
template <typename Fn>
void pool(double* out, int g, int f, Fn&& value) {
  const double inv = 1.0 / (static_cast<double>(f) * f);
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      double s = 0.0;
      for (int y = row * f; y < (row + 1) * f; ++y) {
        for (int x = col * f; x < (col + 1) * f; ++x) s += value(x, y);
      }
      out[row * g + col] = s * inv;
    }
  }
}

void pool_belief(double* out, const OccupancyGrid& map, int g, int f) {
  pool(out, g, f, [&](int x, int y) { return map.at(x, y); });
}

void pool_entropy(double* out, const OccupancyGrid& map, const ImportanceWeights& w, int g,
                  int f) {
  pool(out, g, f, [&](int x, int y) { return weighted_cell_entropy(map.at(x, y), w); });
}

void pool_footprints(double* out, std::span<const CellRect> rects, int g, int f) {
  pool(out, g, f, [&](int x, int y) {
    for (const CellRect& r : rects) {
      if (r.contains(x, y)) return 1.0;
    }
    return 0.0;
  });
}

double altitude_marker(const EnvConfig& cfg, const LatticePos& p) {
  return cfg.altitude(p.level) / cfg.max_altitude;
}

std::string action_plane_name(int slot, Action a) {
  return "other_actions.slot" + std::to_string(slot) + "." + std::string(action_name(a));
}

}  // namespace

std::string_view plane_name(Plane p) { return kPlaneNames[static_cast<int>(p)]; }

Plane parse_plane(std::string_view name) {
  for (int i = 0; i < kNumPlaneKinds; ++i) {
    if (kPlaneNames[i] == name) return static_cast<Plane>(i);
  }
  fail(ErrorKind::kUsage, "unknown feature plane '" + std::string(name) + "'");
}

std::vector<std::string> actor_manifest(const FeatureConfig& fc) {
  std::vector<std::string> names;
  for (Plane p : kActorPlanes) {
    if (fc.on(p)) names.emplace_back(plane_name(p));
  }
  return names;
}

std::vector<std::string> critic_manifest(const FeatureConfig& fc, int num_agents,
                                         CriticInput input) {
  std::vector<std::string> names = actor_manifest(fc);
  if (input == CriticInput::kLocal) return names;
  for (Plane p : kGlobalPlanes) {
    if (fc.on(p)) names.emplace_back(plane_name(p));
  }
  if (input == CriticInput::kFull && fc.on(Plane::kOtherActions)) {
    for (int k = 0; k < num_agents - 1; ++k) {
      for (Action a : kAllActions) names.push_back(action_plane_name(k, a));
    }
  }
  return names;
}

namespace {

void write_actor_planes(PlaneWriter& w, const AgentLocalState& local, const EnvConfig& cfg,
                        const FeatureConfig& fc) {
  const int g = cfg.lattice_size();
  const int f = cfg.pool_factor();
  check_resolutions(cfg, local.map);

  if (fc.on(Plane::kPositionMap)) {
    double* plane = w.add(std::string(plane_name(Plane::kPositionMap)));
    const int c = g / 2;
    for (int py = 0; py < g; ++py) {
      for (int px = 0; px < g; ++px) {
        const int col = local.position.col + px - c;
        const int row = local.position.row + py - c;
        if (col < 0 || col >= g || row < 0 || row >= g) plane[py * g + px] = -1.0;
      }
    }
    for (int j = 0; j < static_cast<int>(local.known_positions.size()); ++j) {
      if (j == local.id) continue;
      const LatticePos& p = local.known_positions[j];
      const int px = p.col - local.position.col + c;
      const int py = p.row - local.position.row + c;
      if (px >= 0 && px < g && py >= 0 && py < g) plane[py * g + px] = altitude_marker(cfg, p);
    }
    plane[c * g + c] = altitude_marker(cfg, local.position);
  }
  if (fc.on(Plane::kMapState)) {
    pool_belief(w.add(std::string(plane_name(Plane::kMapState))), local.map, g, f);
  }
  if (fc.on(Plane::kEntropyMap)) {
    pool_entropy(w.add(std::string(plane_name(Plane::kEntropyMap))), local.map, cfg.weights,
                 g, f);
  }
  if (fc.on(Plane::kMeasurementEntropy)) {
    double* plane = w.add(std::string(plane_name(Plane::kMeasurementEntropy)));
    if (local.last_measurement) {
      const Measurement& m = *local.last_measurement;
      const double h1 = weighted_cell_entropy(m.accuracy, cfg.weights);
      const double h0 = weighted_cell_entropy(1.0 - m.accuracy, cfg.weights);
      pool(plane, g, f, [&](int x, int y) {
        if (!m.footprint.contains(x, y)) return 0.0;
        return m.label(x, y) ? h1 : h0;
      });
    }
  }
  if (fc.on(Plane::kFootprintMap)) {
    pool_footprints(w.add(std::string(plane_name(Plane::kFootprintMap))),
                    local.visible_footprints, g, f);
  }
  if (fc.on(Plane::kAgentId)) {
    double* plane = w.add(std::string(plane_name(Plane::kAgentId)));
    const double v = static_cast<double>(local.id) / std::max(1, local.num_agents);
    std::fill(plane, plane + g * g, v);
  }
  if (fc.on(Plane::kBudget)) {
    double* plane = w.add(std::string(plane_name(Plane::kBudget)));
    std::fill(plane, plane + g * g, static_cast<double>(local.budget) / cfg.budget);
  }
}

}  // namespace

FeatureStack build_actor_features(const AgentLocalState& local, const EnvConfig& cfg,
                                  const FeatureConfig& fc) {
  PlaneWriter w{cfg.lattice_size(), {}, {}};
  write_actor_planes(w, local, cfg, fc);
  return w.finish();
}

FeatureStack build_critic_features(const GlobalState& global, const AgentLocalState& local,
                                   std::span<const Action> other_actions,
                                   const EnvConfig& cfg, const FeatureConfig& fc,
                                   CriticInput input) {
  const int n = static_cast<int>(global.positions.size());
  require(static_cast<int>(other_actions.size()) == n - 1, ErrorKind::kContract,
          "critic features need " + std::to_string(n - 1) + " other-agent actions, got " +
              std::to_string(other_actions.size()));
  const int g = cfg.lattice_size();
  const int f = cfg.pool_factor();
  PlaneWriter w{g, {}, {}};
  write_actor_planes(w, local, cfg, fc);
  if (input == CriticInput::kLocal) return w.finish();

  check_resolutions(cfg, global.map);
  if (fc.on(Plane::kGlobalPositionMap)) {
    double* plane = w.add(std::string(plane_name(Plane::kGlobalPositionMap)));
    for (const LatticePos& p : global.positions) plane[p.row * g + p.col] = altitude_marker(cfg, p);
  }
  if (fc.on(Plane::kGlobalMapState)) {
    pool_belief(w.add(std::string(plane_name(Plane::kGlobalMapState))), global.map, g, f);
  }
  if (fc.on(Plane::kGlobalEntropyMap)) {
    pool_entropy(w.add(std::string(plane_name(Plane::kGlobalEntropyMap))), global.map,
                 cfg.weights, g, f);
  }
  if (fc.on(Plane::kGlobalFootprintMap)) {
    pool_footprints(w.add(std::string(plane_name(Plane::kGlobalFootprintMap))),
                    global.footprints, g, f);
  }
  if (input == CriticInput::kFull && fc.on(Plane::kOtherActions)) {
    int slot = 0;
    for (int j = 0; j < n; ++j) {
      if (j == local.id) continue;
      const LatticePos& p = global.positions[j];
      for (Action a : kAllActions) {
        double* plane = w.add(action_plane_name(slot, a));
        if (other_actions[slot] == a) plane[p.row * g + p.col] = 1.0;
      }
      ++slot;
    }
  }
  return w.finish();
}

void NetArchitecture::validate() const {
  require(!conv_channels.empty() && conv_channels.size() == conv_strides.size(),
          ErrorKind::kConfig, "conv channel and stride lists must be non-empty and aligned");
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::kConfig, "kernel size must be odd");
  for (int c : conv_channels) require(c >= 1, ErrorKind::kConfig, "conv channels must be >= 1");
  for (int s : conv_strides) require(s >= 1, ErrorKind::kConfig, "conv strides must be >= 1");
  for (int h : mlp_hidden) require(h >= 1, ErrorKind::kConfig, "MLP widths must be >= 1");
}

void ConvNet::add_param(std::string name, nn::Tensor value) {
  names_.push_back(std::move(name));
  params_.push_back(nn::Var::leaf(std::move(value), true));
}

ConvNet::ConvNet(int in_channels, int grid, int outputs, NetArchitecture arch, Rng& rng)
    : in_channels_(in_channels), grid_(grid), outputs_(outputs), arch_(std::move(arch)) {
  arch_.validate();
  require(in_channels >= 1 && grid >= 1 && outputs >= 1, ErrorKind::kConfig,
          "network dimensions must be positive");
  const auto k = static_cast<std::size_t>(arch_.kernel);
  std::size_t c = static_cast<std::size_t>(in_channels);
  int side = grid;
  for (std::size_t l = 0; l < arch_.conv_channels.size(); ++l) {
    const auto o = static_cast<std::size_t>(arch_.conv_channels[l]);
    nn::Tensor w({o, c, k, k});
    nn::kaiming_normal(w, c * k * k, rng);
    add_param("conv" + std::to_string(l) + ".weight", std::move(w));
    add_param("conv" + std::to_string(l) + ".bias", nn::Tensor({o}, 0.0));
    side = (side + 2 * (arch_.kernel / 2) - arch_.kernel) / arch_.conv_strides[l] + 1;
    require(side >= 1, ErrorKind::kConfig, "conv stack collapses the input grid");
    c = o;
  }
  std::size_t width = c * static_cast<std::size_t>(side) * side;
  std::vector<int> widths = arch_.mlp_hidden;
  widths.push_back(outputs);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const auto o = static_cast<std::size_t>(widths[l]);
    nn::Tensor w({o, width});
    nn::kaiming_normal(w, width, rng);
    add_param("fc" + std::to_string(l) + ".weight", std::move(w));
    add_param("fc" + std::to_string(l) + ".bias", nn::Tensor({o}, 0.0));
    width = o;
  }
}

nn::Var ConvNet::forward(const nn::Var& input) const {
  const nn::Shape& s = input.shape();
  if (s.size() != 4 || s[1] != static_cast<std::size_t>(in_channels_) ||
      s[2] != static_cast<std::size_t>(grid_) || s[3] != static_cast<std::size_t>(grid_)) {
    fail(ErrorKind::kConfig, "network expects [B, " + std::to_string(in_channels_) + ", " +
                                 std::to_string(grid_) + ", " + std::to_string(grid_) +
                                 "] input, got " + nn::shape_string(s));
  }
  nn::Var h = input;
  std::size_t p = 0;
  for (std::size_t l = 0; l < arch_.conv_channels.size(); ++l, p += 2) {
    h = nn::relu(nn::conv2d(h, params_[p], params_[p + 1], arch_.conv_strides[l],
                            arch_.kernel / 2));
  }
  const std::size_t batch = s[0];
  h = nn::reshape(h, {batch, h.value().size() / batch});
  const std::size_t layers = arch_.mlp_hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l, p += 2) {
    h = nn::linear(h, params_[p], params_[p + 1]);
    if (l + 1 < layers) h = nn::relu(h);
  }
  return h;
}

std::vector<double> ConvNet::forward_one(const nn::Tensor& planes) const {
  nn::NoGradGuard guard;
  nn::Shape shape{1};
  shape.insert(shape.end(), planes.shape().begin(), planes.shape().end());
  nn::Var out = forward(nn::Var::constant(planes.reshaped(shape)));
  return {out.value().values().begin(), out.value().values().end()};
}

void ConvNet::zero_grad() {
  for (nn::Var& p : params_) p.zero_grad();
}

void ConvNet::copy_from(const ConvNet& other) {
  require(other.params_.size() == params_.size(), ErrorKind::kDimension,
          "cannot copy parameters between different architectures");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    require(other.params_[i].shape() == params_[i].shape(), ErrorKind::kDimension,
            "parameter shape mismatch in copy");
    params_[i].mutable_value() = other.params_[i].value();
  }
}

ConvNet ConvNet::clone() const {
  ConvNet copy;
  copy.in_channels_ = in_channels_;
  copy.grid_ = grid_;
  copy.outputs_ = outputs_;
  copy.arch_ = arch_;
  copy.names_ = names_;
  for (const nn::Var& p : params_) copy.params_.push_back(nn::Var::leaf(p.value(), true));
  return copy;
}

namespace {

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

const std::string& meta(const nn::Checkpoint& ckpt, const std::string& key) {
  const std::string* v = ckpt.find_metadata(key);
  require(v != nullptr, ErrorKind::kConfig, "checkpoint lacks metadata '" + key + "'");
  return *v;
}

}  // namespace

void ConvNet::append_to(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.metadata.emplace_back(prefix + ".in_channels", std::to_string(in_channels_));
  ckpt.metadata.emplace_back(prefix + ".grid", std::to_string(grid_));
  ckpt.metadata.emplace_back(prefix + ".outputs", std::to_string(outputs_));
  ckpt.metadata.emplace_back(prefix + ".conv_channels", join(arch_.conv_channels));
  ckpt.metadata.emplace_back(prefix + ".conv_strides", join(arch_.conv_strides));
  ckpt.metadata.emplace_back(prefix + ".kernel", std::to_string(arch_.kernel));
  ckpt.metadata.emplace_back(prefix + ".mlp_hidden", join(arch_.mlp_hidden));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ckpt.tensors.emplace_back(prefix + "." + names_[i], params_[i].value());
  }
}

ConvNet ConvNet::from_checkpoint(const nn::Checkpoint& ckpt, const std::string& prefix) {
  NetArchitecture arch;
  arch.conv_channels = split_ints(meta(ckpt, prefix + ".conv_channels"));
  arch.conv_strides = split_ints(meta(ckpt, prefix + ".conv_strides"));
  arch.kernel = std::stoi(meta(ckpt, prefix + ".kernel"));
  arch.mlp_hidden = split_ints(meta(ckpt, prefix + ".mlp_hidden"));
  Rng rng(0);
  ConvNet net(std::stoi(meta(ckpt, prefix + ".in_channels")),
              std::stoi(meta(ckpt, prefix + ".grid")), std::stoi(meta(ckpt, prefix + ".outputs")),
              arch, rng);
  for (std::size_t i = 0; i < net.params_.size(); ++i) {
    const nn::Tensor* t = ckpt.find_tensor(prefix + "." + net.names_[i]);
    require(t != nullptr, ErrorKind::kConfig,
            "checkpoint lacks tensor '" + prefix + "." + net.names_[i] + "'");
    require(t->shape() == net.params_[i].shape(), ErrorKind::kConfig,
            "checkpoint tensor '" + prefix + "." + net.names_[i] + "' has shape " +
                nn::shape_string(t->shape()) + ", expected " +
                nn::shape_string(net.params_[i].shape()));
    net.params_[i].mutable_value() = *t;
  }
  return net;
}

std::vector<std::uint8_t> mask_bytes(const ActionMask& mask) {
  std::vector<std::uint8_t> out(kNumActions);
  for (int i = 0; i < kNumActions; ++i) out[i] = mask[i] ? 1 : 0;
  return out;
}

std::array<double, kNumActions> actor_forward(const ConvNet& actor, const FeatureStack& features,
                                              const ActionMask& mask, double eps) {
  require(actor.outputs() == kNumActions, ErrorKind::kConfig, "actor must output 6 logits");
  const std::vector<double> logits = actor.forward_one(features.planes);
  const auto m = mask_bytes(mask);
  const std::vector<double> p = nn::masked_bounded_softmax(logits, m, eps);
  std::array<double, kNumActions> out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

std::array<double, kNumActions> critic_forward(const ConvNet& critic,
                                               const FeatureStack& features) {
  require(critic.outputs() == kNumActions, ErrorKind::kConfig, "critic must output 6 values");
  const std::vector<double> q = critic.forward_one(features.planes);
  std::array<double, kNumActions> out{};
  std::copy(q.begin(), q.end(), out.begin());
  return out;
}

}  // namespace mipp
