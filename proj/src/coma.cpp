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

#include "mipp/coma.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mipp/error.hpp"
#include "mipp/evaluation.hpp"
#include "mipp/parallel.hpp"
#include "mipp/planners.hpp"

namespace mipp {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kComa: return "coma";
    case Variant::kCentralQV: return "central-qv";
    case Variant::kActorIndependent: return "actor-independent";
    case Variant::kDecentralised: return "decentralised";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kComa, Variant::kCentralQV, Variant::kActorIndependent,
                    Variant::kDecentralised}) {
    if (variant_name(v) == name) return v;
  }
  fail(ErrorKind::kUsage,
       "unknown variant '" + std::string(name) +
           "' (expected coma, central-qv, actor-independent or decentralised)");
}

CriticInput critic_input(Variant v) {
  switch (v) {
    case Variant::kComa:
    case Variant::kCentralQV: return CriticInput::kFull;
    case Variant::kActorIndependent: return CriticInput::kNoActions;
    case Variant::kDecentralised: return CriticInput::kLocal;
  }
  return CriticInput::kFull;
}

void TrainConfig::validate() const {
  require(missions >= 1, ErrorKind::kConfig, "train.missions must be >= 1");
  require(rollout_block >= 1, ErrorKind::kConfig, "train.rollout_block must be >= 1");
  require(epochs >= 1, ErrorKind::kConfig, "train.epochs must be >= 1");
  require(batch >= 1, ErrorKind::kConfig, "train.batch must be >= 1");
  require(actor_lr > 0.0 && critic_lr > 0.0, ErrorKind::kConfig,
          "learning rates must be positive");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kConfig, "train.lambda must lie in [0, 1]");
  require(gamma > 0.0 && gamma <= 1.0, ErrorKind::kConfig, "train.gamma must lie in (0, 1]");
  require(target_interval >= 1, ErrorKind::kConfig, "train.target_interval must be >= 1");
  require(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0,
          ErrorKind::kConfig, "epsilon endpoints must lie in [0, 1]");
  require(eps_anneal_missions >= 1, ErrorKind::kConfig,
          "train.eps_anneal_missions must be >= 1");
  require(grad_clip > 0.0, ErrorKind::kConfig, "train.grad_clip must be positive");
  require(checkpoint_every >= 0, ErrorKind::kConfig, "train.checkpoint_every must be >= 0");
  arch.validate();
}

double TrainConfig::epsilon(int missions_done) const {
  const double f = std::min(1.0, static_cast<double>(missions_done) / eps_anneal_missions);
  return (1.0 - f) * eps_start + f * eps_end;
}

int TrainConfig::interactions_per_mission(const EnvConfig& env) const {
  return env.budget * (count_agent_decisions ? env.num_agents : 1);
}

std::vector<double> td_lambda_targets(std::span<const double> rewards,
                                      std::span<const double> q_taken, double lambda,
                                      double gamma) {
  require(rewards.size() == q_taken.size(), ErrorKind::kContract,
          "TD(lambda): " + std::to_string(rewards.size()) + " rewards vs " +
              std::to_string(q_taken.size()) + " Q values");
  std::vector<double> g(rewards.size());
  if (g.empty()) return g;
  const std::size_t last = g.size() - 1;
  g[last] = rewards[last];
  for (std::size_t t = last; t-- > 0;) {
    g[t] = rewards[t] + gamma * ((1.0 - lambda) * q_taken[t + 1] + lambda * g[t + 1]);
  }
  return g;
}

double counterfactual_advantage(std::span<const double> q, std::span<const double> policy,
                                Action taken) {
  require(q.size() == static_cast<std::size_t>(kNumActions) && policy.size() == q.size(),
          ErrorKind::kContract, "advantage needs one Q value and probability per action");
  double total = 0.0;
  double baseline = 0.0;
  for (std::size_t u = 0; u < q.size(); ++u) {
    require(policy[u] >= 0.0, ErrorKind::kContract, "negative policy probability");
    total += policy[u];
    baseline += policy[u] * q[u];
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::kContract,
          "policy is not normalized (sums to " + std::to_string(total) + ")");
  return q[static_cast<int>(taken)] - baseline;
}

double advantage_variant(Variant v, const AdvantageInputs& in) {
  if (v == Variant::kCentralQV) {
    require(in.value.has_value(), ErrorKind::kConfig, "central-qv advantage needs V(s)");
    require(in.q.size() == static_cast<std::size_t>(kNumActions), ErrorKind::kContract,
            "advantage needs one Q value per action");
    return in.q[static_cast<int>(in.taken)] - *in.value;
  }
  return counterfactual_advantage(in.q, in.policy, in.taken);
}

InputLayout input_layout(const FeatureConfig& fc, int num_agents, Variant v) {
  InputLayout l;
  l.actor = static_cast<int>(actor_manifest(fc).size());
  l.full = static_cast<int>(critic_manifest(fc, num_agents, CriticInput::kFull).size());
  l.critic = static_cast<int>(critic_manifest(fc, num_agents, critic_input(v)).size());
  if (v == Variant::kCentralQV) {
    l.value = static_cast<int>(critic_manifest(fc, num_agents, CriticInput::kNoActions).size());
  }
  require(l.actor > 0, ErrorKind::kConfig, "every actor feature plane is disabled");
  return l;
}

nn::Tensor stack_inputs(std::span<const Transition> data, std::span<const std::size_t> index,
                        int channels) {
  require(!index.empty(), ErrorKind::kContract, "empty batch");
  const nn::Shape& s = data[index[0]].features.shape();
  require(s.size() == 3 && static_cast<int>(s[0]) >= channels, ErrorKind::kDimension,
          "transition features have fewer than " + std::to_string(channels) + " planes");
  const std::size_t plane = s[1] * s[2];
  const std::size_t per = plane * static_cast<std::size_t>(channels);
  std::vector<double> values(per * index.size());
  for (std::size_t b = 0; b < index.size(); ++b) {
    const double* src = data[index[b]].features.data();
    std::copy(src, src + per, values.begin() + static_cast<std::ptrdiff_t>(b * per));
  }
  return nn::Tensor({index.size(), static_cast<std::size_t>(channels), s[1], s[2]},
                    std::move(values));
}

namespace {

double finish_update(ConvNet& net, nn::Adam& opt, const nn::Var& loss, double grad_clip) {
  const double value = loss.value().item();
  if (!std::isfinite(value)) fail(ErrorKind::kDivergence, "non-finite loss");
  net.zero_grad();
  nn::backward(loss);
  nn::clip_grad_norm(net.parameters(), grad_clip);
  opt.step();
  net.zero_grad();
  return value;
}

}  // namespace

double actor_update(ConvNet& actor, nn::Adam& opt, const nn::Tensor& inputs,
                    std::span<const std::uint8_t> masks, std::span<const double> eps,
                    std::span<const int> actions, std::span<const double> advantages,
                    double grad_clip) {
  const std::size_t b = inputs.dim(0);
  require(actions.size() == b && advantages.size() == b, ErrorKind::kContract,
          "actor batch is misaligned");
  const nn::Var logits = actor.forward(nn::Var::constant(inputs));
  const nn::Var probs = nn::masked_bounded_softmax(logits, masks, eps);
  const nn::Var taken = nn::gather(probs, actions);
  for (std::size_t i = 0; i < b; ++i) {
    if (!(taken.value()[i] > 0.0)) {
      fail(ErrorKind::kData, "taken action has zero probability in batch row " +
                                 std::to_string(i));
    }
  }
  const nn::Var adv = nn::Var::constant(nn::Tensor({b}, {advantages.begin(), advantages.end()}));
  const nn::Var loss = nn::scale(nn::mean(nn::mul(nn::log(taken), adv)), -1.0);
  return finish_update(actor, opt, loss, grad_clip);
}

double critic_update(ConvNet& critic, nn::Adam& opt, const nn::Tensor& inputs,
                     std::span<const int> actions, std::span<const double> targets,
                     double grad_clip) {
  const std::size_t b = inputs.dim(0);
  require(targets.size() == b && (actions.empty() || actions.size() == b), ErrorKind::kContract,
          "critic batch is misaligned");
  for (double t : targets) {
    if (!std::isfinite(t)) fail(ErrorKind::kDivergence, "non-finite critic target");
  }
  const nn::Var out = critic.forward(nn::Var::constant(inputs));
  nn::Var pred;
  if (actions.empty()) {
    require(critic.outputs() == 1, ErrorKind::kConfig, "value regression needs one output");
    pred = nn::reshape(out, {b});
  } else {
    pred = nn::gather(out, actions);
  }
  const nn::Var target = nn::Var::constant(nn::Tensor({b}, {targets.begin(), targets.end()}));
  const nn::Var loss = nn::mean(nn::square(nn::sub(pred, target)));
  return finish_update(critic, opt, loss, grad_clip);
}

ComaNetworks make_networks(const EnvConfig& env, const TrainConfig& cfg, Rng& rng) {
  const InputLayout l = input_layout(cfg.features, env.num_agents, cfg.variant);
  const int g = env.lattice_size();
  ComaNetworks nets;
  nets.actor = ConvNet(l.actor, g, kNumActions, cfg.arch, rng);
  nets.critic = ConvNet(l.critic, g, kNumActions, cfg.arch, rng);
  nets.target = nets.critic.clone();
  if (l.value > 0) nets.value = ConvNet(l.value, g, 1, cfg.arch, rng);
  return nets;
}

MissionRollout collect_mission(const ConvNet& actor, const EnvConfig& env,
                               const TrainConfig& cfg, int mission, std::uint64_t seed,
                               double eps) {
  const MissionSeeds seeds = MissionSeeds::derive(seed, static_cast<std::uint64_t>(mission));
  Rng terrain_rng(seeds.terrain);
  const GroundTruthMap terrain = generate_terrain(terrain_rng, env);
  EnvState state = initial_state(env, terrain, seeds.noise);
  const int n = env.num_agents;
  std::vector<Rng> rngs;
  for (int i = 0; i < n; ++i) rngs.emplace_back(seeds.agent(i));

  MissionRollout out;
  std::vector<Action> joint(n);
  std::vector<ActionMask> masks(n);
  std::vector<std::array<double, kNumActions>> policies(n);
  std::vector<Action> others;
  for (int t = 0; t < env.budget; ++t) {
    for (int i = 0; i < n; ++i) {
      masks[i] = valid_actions(state.global, env, i);
      const FeatureStack f = build_actor_features(state.locals[i], env, cfg.features);
      policies[i] = actor_forward(actor, f, masks[i], eps);
      joint[i] = static_cast<Action>(sample_index(policies[i], hash_to_unit(rngs[i]())));
    }
    const std::size_t first = out.transitions.size();
    for (int i = 0; i < n; ++i) {
      others.clear();
      for (int j = 0; j < n; ++j) {
        if (j != i) others.push_back(joint[j]);
      }
      Transition tr;
      tr.features = build_critic_features(state.global, state.locals[i], others, env,
                                          cfg.features, CriticInput::kFull)
                        .planes;
      tr.action = joint[i];
      tr.mask = masks[i];
      tr.policy = policies[i];
      tr.epsilon = eps;
      tr.mission = mission;
      tr.step = t;
      tr.agent = i;
      out.transitions.push_back(std::move(tr));
    }
    const StepOutcome o = step(state, joint, terrain, seeds.noise, env);
    out.total_return += o.reward;
    for (std::size_t k = first; k < out.transitions.size(); ++k) {
      out.transitions[k].reward = o.reward;
      out.transitions[k].terminal = o.done;
    }
  }
  return out;
}

namespace {

// Runs `fn` over the network in chunks without recording a graph.
template <typename Fn>
void forward_chunks(const ConvNet& net, std::span<const Transition> data,
                    std::span<const std::size_t> index, int channels, Fn&& fn) {
  constexpr std::size_t kChunk = 256;
  nn::NoGradGuard guard;
  for (std::size_t s = 0; s < index.size(); s += kChunk) {
    const auto part = index.subspan(s, std::min(kChunk, index.size() - s));
    const nn::Var out = net.forward(nn::Var::constant(stack_inputs(data, part, channels)));
    const std::size_t k = static_cast<std::size_t>(net.outputs());
    for (std::size_t b = 0; b < part.size(); ++b) fn(part[b], out.value().data() + b * k);
  }
}

std::vector<double> block_targets(const ConvNet& target, std::span<const Transition> data,
                                  const InputLayout& layout, const TrainConfig& cfg,
                                  int num_agents, int budget) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> q(data.size());
  forward_chunks(target, data, all, layout.critic, [&](std::size_t i, const double* row) {
    q[i] = row[static_cast<int>(data[i].action)];
  });
  std::vector<double> g(data.size());
  const std::size_t per_mission = static_cast<std::size_t>(num_agents) * budget;
  std::vector<double> r(budget), qs(budget);
  for (std::size_t base = 0; base < data.size(); base += per_mission) {
    for (int i = 0; i < num_agents; ++i) {
      for (int t = 0; t < budget; ++t) {
        const std::size_t k = base + static_cast<std::size_t>(t) * num_agents + i;
        r[t] = data[k].reward;
        qs[t] = q[k];
      }
      const std::vector<double> gi = td_lambda_targets(r, qs, cfg.lambda, cfg.gamma);
      for (int t = 0; t < budget; ++t) {
        g[base + static_cast<std::size_t>(t) * num_agents + i] = gi[t];
      }
    }
  }
  return g;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  return s;
}

}  // namespace

void write_training_log_header(std::ostream& os) {
  os << "block,missions_done,env_interactions,mean_return,actor_loss,critic_loss,epsilon,"
        "wallclock_s\n";
}

void write_training_log_row(std::ostream& os, const BlockLog& row) {
  os << std::setprecision(17) << row.block << ',' << row.missions_done << ','
     << row.interactions << ',' << row.mean_return << ',' << row.actor_loss << ','
     << row.critic_loss << ',' << row.epsilon << ',' << row.wallclock_s << '\n';
}

nn::Checkpoint make_checkpoint(const ComaNetworks& nets, const EnvConfig& env,
                               const TrainConfig& cfg,
                               std::span<const std::pair<std::string, std::string>> metadata) {
  nn::Checkpoint ckpt;
  ckpt.metadata.emplace_back("variant", std::string(variant_name(cfg.variant)));
  ckpt.metadata.emplace_back("actor.manifest", join_names(actor_manifest(cfg.features)));
  ckpt.metadata.emplace_back(
      "critic.manifest",
      join_names(critic_manifest(cfg.features, env.num_agents, critic_input(cfg.variant))));
  if (nets.value) {
    ckpt.metadata.emplace_back(
        "value.manifest",
        join_names(critic_manifest(cfg.features, env.num_agents, CriticInput::kNoActions)));
  }
  for (const auto& kv : metadata) ckpt.metadata.push_back(kv);
  nets.actor.append_to(ckpt, "actor");
  nets.critic.append_to(ckpt, "critic");
  if (nets.value) nets.value->append_to(ckpt, "value");
  return ckpt;
}

LoadedActor load_actor(const nn::Checkpoint& ckpt) {
  LoadedActor out{ConvNet::from_checkpoint(ckpt, "actor"), {}};
  const std::string* manifest = ckpt.find_metadata("actor.manifest");
  require(manifest != nullptr, ErrorKind::kConfig, "checkpoint lacks metadata 'actor.manifest'");
  for (int p = 0; p < kNumPlaneKinds; ++p) out.features.enabled[p] = false;
  std::istringstream is(*manifest);
  std::string name;
  while (std::getline(is, name, ',')) {
    if (!name.empty()) out.features.set(parse_plane(name), true);
  }
  require(static_cast<int>(actor_manifest(out.features).size()) == out.actor.in_channels(),
          ErrorKind::kConfig, "actor manifest does not match the stored network");
  return out;
}

TrainResult train(const EnvConfig& env, const TrainConfig& cfg, std::uint64_t seed,
                  const TrainOutputs& outputs) {
  env.validate();
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  Rng init_rng(derive_seed(seed, {0x6e6574}));
  Rng shuffle_rng(derive_seed(seed, {0x736875}));

  TrainResult result{make_networks(env, cfg, init_rng), {}, {}, {}};
  ComaNetworks& nets = result.nets;
  result.initial_actor = nets.actor.clone();
  const InputLayout layout = input_layout(cfg.features, env.num_agents, cfg.variant);

  nn::Adam actor_opt(nets.actor.parameters(), {.lr = cfg.actor_lr});
  nn::Adam critic_opt(nets.critic.parameters(), {.lr = cfg.critic_lr});
  std::optional<nn::Adam> value_opt;
  if (nets.value) value_opt.emplace(nets.value->parameters(), nn::Adam::Options{.lr = cfg.critic_lr});

  const int per_mission = cfg.interactions_per_mission(env);
  const int missions_per_block = std::max(1, (cfg.rollout_block + per_mission - 1) / per_mission);

  if (outputs.log) write_training_log_header(*outputs.log);
  if (outputs.missions) *outputs.missions << "mission,block,epsilon,return\n";

  std::int64_t interactions = 0;
  std::int64_t last_copy = 0;
  int missions_done = 0;
  for (int block = 0; missions_done < cfg.missions; ++block) {
    const int m = std::min(missions_per_block, cfg.missions - missions_done);
    std::vector<MissionRollout> rollouts(static_cast<std::size_t>(m));
    parallel_for(rollouts.size(), outputs.threads, [&](std::size_t k) {
      const int mission = missions_done + static_cast<int>(k);
      rollouts[k] = collect_mission(nets.actor, env, cfg, mission, seed, cfg.epsilon(mission));
    });

    BlockLog row;
    row.block = block;
    std::vector<Transition> data;
    double return_sum = 0.0;
    for (int k = 0; k < m; ++k) {
      const int mission = missions_done + k;
      const double eps = cfg.epsilon(mission);
      result.mission_returns.push_back(rollouts[k].total_return);
      return_sum += rollouts[k].total_return;
      if (outputs.missions) {
        *outputs.missions << std::setprecision(17) << mission << ',' << block << ',' << eps
                          << ',' << rollouts[k].total_return << '\n';
      }
      row.epsilon = eps;
      for (Transition& tr : rollouts[k].transitions) data.push_back(std::move(tr));
    }
    rollouts.clear();
    missions_done += m;
    interactions += static_cast<std::int64_t>(m) * per_mission;
    if (interactions - last_copy >= cfg.target_interval) {
      nets.target.copy_from(nets.critic);
      last_copy = interactions;
    }

    double actor_loss_sum = 0.0;
    double critic_loss_sum = 0.0;
    int updates = 0;
    try {
      const std::vector<double> targets =
          block_targets(nets.target, data, layout, cfg, env.num_agents, env.budget);
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), 0);
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch)) {
          const std::span<const std::size_t> idx(
              order.data() + s, std::min<std::size_t>(cfg.batch, order.size() - s));
          const std::size_t b = idx.size();
          std::vector<int> actions(b);
          std::vector<double> g(b), eps(b);
          std::vector<std::uint8_t> masks(b * kNumActions);
          for (std::size_t i = 0; i < b; ++i) {
            const Transition& tr = data[idx[i]];
            actions[i] = static_cast<int>(tr.action);
            g[i] = targets[idx[i]];
            eps[i] = tr.epsilon;
            for (int u = 0; u < kNumActions; ++u) masks[i * kNumActions + u] = tr.mask[u];
          }
          const nn::Tensor xq = stack_inputs(data, idx, layout.critic);
          critic_loss_sum +=
              critic_update(nets.critic, critic_opt, xq, actions, g, cfg.grad_clip);
          std::optional<nn::Tensor> xv;
          if (nets.value) {
            xv = stack_inputs(data, idx, layout.value);
            critic_update(*nets.value, *value_opt, *xv, {}, g, cfg.grad_clip);
          }

          const nn::Tensor xa = stack_inputs(data, idx, layout.actor);
          std::vector<double> adv(b);
          {
            nn::NoGradGuard guard;
            const nn::Var q = nets.critic.forward(nn::Var::constant(xq));
            const nn::Var pi = nn::masked_bounded_softmax(
                nets.actor.forward(nn::Var::constant(xa)), masks, eps);
            std::optional<nn::Var> v;
            if (nets.value) v = nets.value->forward(nn::Var::constant(*xv));
            for (std::size_t i = 0; i < b; ++i) {
              AdvantageInputs in{
                  std::span<const double>(q.value().data() + i * kNumActions, kNumActions),
                  std::span<const double>(pi.value().data() + i * kNumActions, kNumActions),
                  data[idx[i]].action, std::nullopt};
              if (v) in.value = v->value()[i];
              adv[i] = advantage_variant(cfg.variant, in);
            }
          }
          actor_loss_sum += actor_update(nets.actor, actor_opt, xa, masks, eps, actions, adv,
                                         cfg.grad_clip);
          ++updates;
        }
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kDivergence) {
        fail(ErrorKind::kDivergence, "training block " + std::to_string(block) + ": " + e.what());
      }
      throw;
    }

    row.missions_done = missions_done;
    row.interactions = interactions;
    row.mean_return = return_sum / m;
    row.actor_loss = updates ? actor_loss_sum / updates : 0.0;
    row.critic_loss = updates ? critic_loss_sum / updates : 0.0;
    if (cfg.log_wallclock) {
      row.wallclock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (outputs.log) write_training_log_row(*outputs.log, row);
    result.blocks.push_back(row);
    if (outputs.on_block) outputs.on_block(row);

    const bool last = missions_done >= cfg.missions;
    if (outputs.on_checkpoint &&
        (last || (cfg.checkpoint_every > 0 && (block + 1) % cfg.checkpoint_every == 0))) {
      std::vector<std::pair<std::string, std::string>> meta = outputs.metadata;
      meta.emplace_back("block", std::to_string(block));
      meta.emplace_back("missions_done", std::to_string(missions_done));
      meta.emplace_back("seed", std::to_string(seed));
      std::ostringstream name;
      name << "block_" << std::setw(5) << std::setfill('0') << block;
      const nn::Checkpoint ckpt = make_checkpoint(nets, env, cfg, meta);
      outputs.on_checkpoint(last ? "final" : name.str(), ckpt);
    }
  }
  return result;
}

}  // namespace mipp
