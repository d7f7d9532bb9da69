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

#include "mipp/planners.hpp"

#include <algorithm>
#include <cmath>

#include "mipp/error.hpp"

namespace mipp {

std::string_view planner_kind_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::kRandom: return "random";
    case PlannerKind::kCoverage: return "coverage";
    case PlannerKind::kGreedyIg: return "greedy-ig";
    case PlannerKind::kLearned: return "learned";
  }
  return "?";
}

PlannerKind parse_planner_kind(std::string_view name) {
  for (PlannerKind k : {PlannerKind::kRandom, PlannerKind::kCoverage, PlannerKind::kGreedyIg,
                        PlannerKind::kLearned}) {
    if (planner_kind_name(k) == name) return k;
  }
  fail(ErrorKind::kUsage, "unknown planner '" + std::string(name) +
                              "' (expected random, coverage, greedy-ig or learned)");
}

std::string PlannerSpec::label() const { return std::string(planner_kind_name(kind)); }

Action first_valid(const ActionMask& mask) {
  for (Action a : kAllActions) {
    if (mask[static_cast<int>(a)]) return a;
  }
  fail(ErrorKind::kContract, "no valid action available");
}

Action random_action(const ActionMask& mask, Rng& rng) {
  std::array<Action, kNumActions> valid{};
  int n = 0;
  for (Action a : kAllActions) {
    if (mask[static_cast<int>(a)]) valid[n++] = a;
  }
  require(n > 0, ErrorKind::kContract, "random planner got an empty action mask");
  const auto i = static_cast<int>(hash_to_unit(rng()) * n);
  return valid[std::min(i, n - 1)];
}

Stripe coverage_stripe(int lattice_size, int num_agents, int agent) {
  require(num_agents >= 1 && agent >= 0 && agent < num_agents, ErrorKind::kContract,
          "agent index out of range for stripe assignment");
  return {agent * lattice_size / num_agents, (agent + 1) * lattice_size / num_agents - 1};
}

std::vector<LatticePos> coverage_route(const Stripe& stripe, int rows, int level,
                                       const LatticePos& start) {
  std::vector<LatticePos> route;
  if (stripe.last < stripe.first) return route;
  const bool from_west = std::abs(start.col - stripe.first) <= std::abs(start.col - stripe.last);
  bool eastward = from_west;
  for (int row = 0; row < rows; ++row) {
    for (int i = 0; i <= stripe.last - stripe.first; ++i) {
      const int col = eastward ? stripe.first + i : stripe.last - i;
      route.push_back({col, row, level});
    }
    eastward = !eastward;
  }
  return route;
}

namespace {

class RandomPlanner final : public Planner {
 public:
  explicit RandomPlanner(std::uint64_t seed) : rng_(seed) {}
  std::string_view name() const override { return "random"; }
  Action act(const AgentLocalState&, const ActionMask& mask) override {
    return random_action(mask, rng_);
  }

 private:
  Rng rng_;
};

class CoveragePlanner final : public Planner {
 public:
  CoveragePlanner(const EnvConfig& cfg, int agent, double altitude)
      : rows_(cfg.lattice_size()),
        stripe_(coverage_stripe(cfg.lattice_size(), cfg.num_agents, agent)) {
    const double lv = (altitude - cfg.min_altitude) / cfg.altitude_step;
    level_ = static_cast<int>(std::lround(lv));
    require(std::abs(lv - level_) < 1e-9 && level_ >= 0 && level_ < cfg.num_levels(),
            ErrorKind::kConfig, "coverage altitude is not a lattice altitude");
  }

  std::string_view name() const override { return "coverage"; }

  Action act(const AgentLocalState& local, const ActionMask& mask) override {
    const LatticePos& p = local.position;
    Action want;
    if (p.level != level_) {
      want = p.level < level_ ? Action::kUp : Action::kDown;
    } else {
      if (route_.empty()) route_ = coverage_route(stripe_, rows_, level_, p);
      while (cursor_ < route_.size() && route_[cursor_].same_cell_2d(p)) ++cursor_;
      if (cursor_ >= route_.size()) {
        std::reverse(route_.begin(), route_.end());
        cursor_ = 0;
        while (cursor_ < route_.size() && route_[cursor_].same_cell_2d(p)) ++cursor_;
      }
      want = cursor_ < route_.size() ? toward(p, route_[cursor_]) : Action::kNorth;
    }
    return mask[static_cast<int>(want)] ? want : first_valid(mask);
  }

 private:
  static Action toward(const LatticePos& p, const LatticePos& q) {
    if (q.col > p.col) return Action::kEast;
    if (q.col < p.col) return Action::kWest;
    return q.row > p.row ? Action::kNorth : Action::kSouth;
  }

  int rows_;
  Stripe stripe_;
  int level_ = 0;
  std::vector<LatticePos> route_;
  std::size_t cursor_ = 0;
};

class GreedyIgPlanner final : public Planner {
 public:
  explicit GreedyIgPlanner(const EnvConfig& cfg) : cfg_(cfg) {}
  std::string_view name() const override { return "greedy-ig"; }
  Action act(const AgentLocalState& local, const ActionMask& mask) override {
    return greedy_ig_action(local, mask, cfg_);
  }

 private:
  EnvConfig cfg_;
};

class LearnedPlanner final : public Planner {
 public:
  LearnedPlanner(const EnvConfig& cfg, std::shared_ptr<const ConvNet> actor, FeatureConfig fc,
                 SampleMode mode, std::uint64_t seed)
      : cfg_(cfg), actor_(std::move(actor)), features_(fc), mode_(mode), rng_(seed) {
    require(actor_ != nullptr, ErrorKind::kUsage, "learned planner needs actor weights");
    require(actor_->grid() == cfg.lattice_size(), ErrorKind::kConfig,
            "actor expects a " + std::to_string(actor_->grid()) + "x" +
                std::to_string(actor_->grid()) + " lattice, config has " +
                std::to_string(cfg.lattice_size()));
    require(actor_->in_channels() == static_cast<int>(actor_manifest(fc).size()),
            ErrorKind::kConfig,
            "actor expects " + std::to_string(actor_->in_channels()) +
                " input planes, feature config yields " +
                std::to_string(actor_manifest(fc).size()));
  }

  std::string_view name() const override { return "learned"; }

  Action act(const AgentLocalState& local, const ActionMask& mask) override {
    return learned_action(*actor_, build_actor_features(local, cfg_, features_), mask, mode_,
                          rng_);
  }

 private:
  EnvConfig cfg_;
  std::shared_ptr<const ConvNet> actor_;
  FeatureConfig features_;
  SampleMode mode_;
  Rng rng_;
};

}  // namespace

std::unique_ptr<Planner> make_planner(const PlannerSpec& spec, const EnvConfig& cfg, int agent,
                                      std::uint64_t seed) {
  switch (spec.kind) {
    case PlannerKind::kRandom: return std::make_unique<RandomPlanner>(seed);
    case PlannerKind::kCoverage:
      return std::make_unique<CoveragePlanner>(cfg, agent, spec.coverage_altitude);
    case PlannerKind::kGreedyIg: return std::make_unique<GreedyIgPlanner>(cfg);
    case PlannerKind::kLearned:
      return std::make_unique<LearnedPlanner>(cfg, spec.actor, spec.features, spec.mode, seed);
  }
  fail(ErrorKind::kUsage, "unsupported planner kind");
}

double expected_entropy_reduction(const OccupancyGrid& map, const CellRect& region,
                                  double accuracy, const ImportanceWeights& w) {
  double total = 0.0;
  for (int y = region.y0; y <= region.y1; ++y) {
    for (int x = region.x0; x <= region.x1; ++x) {
      const double p = map.at(x, y);
      const double p_one = accuracy * p + (1.0 - accuracy) * (1.0 - p);
      const double h_one = weighted_cell_entropy(cell_posterior(p, true, accuracy), w);
      const double h_zero = weighted_cell_entropy(cell_posterior(p, false, accuracy), w);
      total += weighted_cell_entropy(p, w) - (p_one * h_one + (1.0 - p_one) * h_zero);
    }
  }
  return total;
}

std::array<std::optional<double>, kNumActions> greedy_scores(const AgentLocalState& local,
                                                             const ActionMask& mask,
                                                             const EnvConfig& cfg) {
  std::array<std::optional<double>, kNumActions> scores;
  for (Action a : kAllActions) {
    if (!mask[static_cast<int>(a)]) continue;
    const LatticePos next = apply(a, local.position);
    const double alt = cfg.altitude(next.level);
    const CellRect fp = footprint(cfg.position(next), cfg.footprint_factor, local.map.width(),
                                  local.map.height(), local.map.resolution());
    scores[static_cast<int>(a)] =
        expected_entropy_reduction(local.map, fp, cfg.sensor.accuracy(alt), cfg.weights);
  }
  return scores;
}

Action greedy_ig_action(const AgentLocalState& local, const ActionMask& mask,
                        const EnvConfig& cfg) {
  const auto scores = greedy_scores(local, mask, cfg);
  std::optional<Action> best;
  double best_score = 0.0;
  for (Action a : kAllActions) {
    const auto& s = scores[static_cast<int>(a)];
    if (!s) continue;
    const double tol = 1e-9 * std::max({1.0, std::abs(*s), std::abs(best_score)});
    if (!best || *s > best_score + tol) {
      best = a;
      best_score = *s;
    }
  }
  require(best.has_value(), ErrorKind::kContract, "greedy planner got an empty action mask");
  return *best;
}

int sample_index(std::span<const double> probabilities, double u) {
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    acc += probabilities[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  require(last >= 0, ErrorKind::kContract, "cannot sample from an all-zero distribution");
  return last;
}

Action learned_action(const ConvNet& actor, const FeatureStack& features, const ActionMask& mask,
                      SampleMode mode, Rng& rng) {
  require(actor.in_channels() == static_cast<int>(features.channels()), ErrorKind::kConfig,
          "actor expects " + std::to_string(actor.in_channels()) + " input planes, got " +
              std::to_string(features.channels()));
  const auto probs = actor_forward(actor, features, mask, 0.0);
  if (mode == SampleMode::kArgmax) {
    int best = -1;
    for (int i = 0; i < kNumActions; ++i) {
      if (mask[i] && (best < 0 || probs[i] > probs[best])) best = i;
    }
    require(best >= 0, ErrorKind::kContract, "learned planner got an empty action mask");
    return static_cast<Action>(best);
  }
  return static_cast<Action>(sample_index(probs, hash_to_unit(rng())));
}

}  // namespace mipp
