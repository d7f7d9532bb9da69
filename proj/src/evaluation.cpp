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

#include "mipp/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "mipp/error.hpp"
#include "mipp/parallel.hpp"

namespace mipp {

double roi_entropy(const OccupancyGrid& grid, const GroundTruthMap& gt,
                   const ImportanceWeights& w) {
  require(grid.same_shape(gt), ErrorKind::kDimension, "map and ground truth differ in size");
  const double h_prior = weighted_cell_entropy(0.5, w);
  double h = 0.0;
  double h0 = 0.0;
  const auto cells = grid.cells();
  const auto labels = gt.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!labels[i]) continue;
    h += weighted_cell_entropy(cells[i], w);
    h0 += h_prior;
  }
  require(h0 > 0.0, ErrorKind::kDegenerate, "terrain has no interesting cells");
  return h / h0;
}

double f1_score(const OccupancyGrid& grid, const GroundTruthMap& gt) {
  require(grid.same_shape(gt), ErrorKind::kDimension, "map and ground truth differ in size");
  std::int64_t tp = 0, fp = 0, fn = 0;
  const auto cells = grid.cells();
  const auto labels = gt.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const bool pred = cells[i] > 0.5;
    if (pred && labels[i]) ++tp;
    else if (pred) ++fp;
    else if (labels[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

MissionSeeds MissionSeeds::derive(std::uint64_t base_seed, std::uint64_t mission) {
  const std::uint64_t ms = derive_seed(base_seed, {mission});
  return {derive_seed(ms, {1}), derive_seed(ms, {2}), derive_seed(ms, {3})};
}

std::uint64_t MissionSeeds::agent(int agent) const {
  return derive_seed(planner, {static_cast<std::uint64_t>(agent)});
}

MissionResult run_mission(const PlannerSpec& planner, const EnvConfig& cfg,
                          const MissionSeeds& seeds, const MissionOptions& options) {
  cfg.validate();
  GroundTruthMap generated;
  if (!options.terrain) {
    Rng rng(seeds.terrain);
    generated = generate_terrain(rng, cfg);
  }
  const GroundTruthMap& terrain = options.terrain ? *options.terrain : generated;

  EnvState state = initial_state(cfg, terrain, seeds.noise);
  const int n = cfg.num_agents;
  std::vector<std::unique_ptr<Planner>> planners;
  for (int i = 0; i < n; ++i) planners.push_back(make_planner(planner, cfg, i, seeds.agent(i)));

  MissionResult out;
  OccupancyGrid prior(terrain.width(), terrain.height(), terrain.resolution());
  out.metrics.push_back({0, roi_entropy(prior, terrain, cfg.weights), 0.0, 0.0});
  out.entropy.push_back(map_entropy(state.global.map, cfg.weights));
  for (int i = 0; i < n; ++i) {
    out.log.push_back(
        {0, i, cfg.position(state.global.positions[i]), "start", 0.0, out.entropy.back()});
  }

  double cumulative = 0.0;
  std::vector<Action> joint(n);
  for (int t = 1; t <= cfg.budget; ++t) {
    for (int i = 0; i < n; ++i) {
      const ActionMask mask = valid_actions(state.global, cfg, i);
      Action a;
      try {
        a = planners[i]->act(state.locals[i], mask);
      } catch (const Error& e) {
        fail(ErrorKind::kContract, "step " + std::to_string(t) + ", agent " +
                                       std::to_string(i) + ": " + e.what());
      }
      require(mask[static_cast<int>(a)], ErrorKind::kContract,
              "step " + std::to_string(t) + ": " + std::string(planners[i]->name()) +
                  " planner returned masked action " + std::string(action_name(a)) +
                  " for agent " + std::to_string(i));
      joint[i] = a;
    }
    const StepOutcome o = step(state, joint, terrain, seeds.noise, cfg);
    cumulative += o.reward;
    out.rewards.push_back(o.reward);
    out.entropy.push_back(o.entropy_after);
    MetricsRecord rec{t, 0.0, 0.0, cumulative};
    if (options.local_metrics) {
      for (const AgentLocalState& local : state.locals) {
        rec.roi_entropy += roi_entropy(local.map, terrain, cfg.weights) / n;
        rec.f1 += f1_score(local.map, terrain) / n;
      }
    } else {
      rec.roi_entropy = roi_entropy(state.global.map, terrain, cfg.weights);
      rec.f1 = f1_score(state.global.map, terrain);
    }
    out.metrics.push_back(rec);
    for (int i = 0; i < n; ++i) {
      out.log.push_back({t, i, cfg.position(state.global.positions[i]),
                         std::string(action_name(joint[i])), o.reward, o.entropy_after});
    }
  }
  if (options.keep_maps) {
    out.final_map = std::move(state.global.map);
    out.terrain = terrain;
  }
  return out;
}

std::vector<int> checkpoint_steps(int budget) {
  return {(budget + 2) / 3, (2 * budget + 2) / 3, budget};
}

TrialStats summarize(const std::string& label, std::span<const MissionResult> missions,
                     int budget) {
  TrialStats s;
  s.planner = label;
  for (int step : checkpoint_steps(budget)) {
    std::vector<double> h, f;
    for (const MissionResult& m : missions) {
      h.push_back(m.metrics.at(step).roi_entropy);
      f.push_back(m.metrics.at(step).f1);
    }
    s.checkpoints.push_back({step, mean(h), sample_std(h), mean(f), sample_std(f)});
  }
  for (const MissionResult& m : missions) {
    s.final_entropy.push_back(m.metrics.back().roi_entropy);
    s.final_f1.push_back(m.metrics.back().f1);
    s.returns.push_back(m.metrics.back().cumulative_reward);
  }
  return s;
}

std::vector<TrialStats> run_benchmark(std::span<const PlannerSpec> planners,
                                      const EnvConfig& cfg, const BenchmarkOptions& options) {
  require(options.missions >= 2, ErrorKind::kUsage, "a benchmark needs at least 2 missions");
  const auto n = static_cast<std::size_t>(options.missions);
  std::vector<TrialStats> stats;
  for (std::size_t p = 0; p < planners.size(); ++p) {
    std::vector<MissionResult> results(n);
    MissionOptions mo{options.terrain, options.keep_maps, options.local_metrics};
    parallel_for(n, options.threads, [&](std::size_t m) {
      results[m] = run_mission(planners[p], cfg, MissionSeeds::derive(options.seed, m), mo);
    });
    if (options.on_mission) {
      for (std::size_t m = 0; m < n; ++m) options.on_mission(p, static_cast<int>(m), results[m]);
    }
    stats.push_back(summarize(planners[p].label(), results, cfg.budget));
  }
  return stats;
}

void write_benchmark_csv(std::ostream& os, std::span<const TrialStats> stats) {
  os << "planner,checkpoint,entropy_mean,entropy_std,f1_mean,f1_std\n" << std::setprecision(17);
  for (const TrialStats& s : stats) {
    for (const CheckpointStats& c : s.checkpoints) {
      os << s.planner << ',' << c.step << ',' << c.entropy_mean << ',' << c.entropy_std << ','
         << c.f1_mean << ',' << c.f1_std << '\n';
    }
  }
}

void write_mission_metrics_header(std::ostream& os) {
  os << "planner,mission,step,roi_entropy,f1,cumulative_reward\n";
}

void write_mission_metrics(std::ostream& os, const std::string& planner, int mission,
                           const MissionResult& result) {
  os << std::setprecision(17);
  for (const MetricsRecord& r : result.metrics) {
    os << planner << ',' << mission << ',' << r.step << ',' << r.roi_entropy << ',' << r.f1
       << ',' << r.cumulative_reward << '\n';
  }
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

TestResult finish_test(double diff, double se, double dof) {
  TestResult r;
  r.mean_difference = diff;
  r.dof = dof;
  if (se == 0.0 || !std::isfinite(se)) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p_two_sided = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = diff / se;
  boost::math::students_t dist(dof);
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
  return r;
}

}  // namespace

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorKind::kContract,
          "paired t-test needs two equal-length samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  return finish_test(mean(d), sample_std(d) / std::sqrt(n), n - 1.0);
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::kContract,
          "Welch test needs samples of size >= 2");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_std(a) * sample_std(a) / na;
  const double vb = sample_std(b) * sample_std(b) / nb;
  const double se = std::sqrt(va + vb);
  const double dof =
      (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return finish_test(mean(a) - mean(b), se, se > 0.0 ? dof : na + nb - 2.0);
}

}  // namespace mipp
