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

// Mission metrics, mission and benchmark runners, and summary statistics.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mipp/environment.hpp"
#include "mipp/planners.hpp"

namespace mipp {

struct MetricsRecord {
  int step = 0;
  double roi_entropy = 1.0;  // normalized by the uniform-prior value
  double f1 = 0.0;
  double cumulative_reward = 0.0;
};

// Weighted entropy over ground-truth interesting cells relative to the same
// cells at p = 0.5. Throws a degenerate-terrain error when no cell is
// interesting.
double roi_entropy(const OccupancyGrid& grid, const GroundTruthMap& gt,
                   const ImportanceWeights& w);

// Positive prediction iff p > 0.5; 0 when nothing is predicted positive or
// the terrain has no interesting cell.
double f1_score(const OccupancyGrid& grid, const GroundTruthMap& gt);

struct MissionSeeds {
  std::uint64_t terrain = 0;
  std::uint64_t noise = 0;
  std::uint64_t planner = 0;  // per-agent streams derive from this

  static MissionSeeds derive(std::uint64_t base_seed, std::uint64_t mission);
  std::uint64_t agent(int agent) const;
};

struct MissionResult {
  std::vector<EpisodeLogRow> log;
  std::vector<MetricsRecord> metrics;  // t = 0 .. B
  std::vector<double> entropy;         // global weighted entropy, t = 0 .. B
  std::vector<double> rewards;         // t = 1 .. B
  std::optional<OccupancyGrid> final_map;
  std::optional<GroundTruthMap> terrain;
};

struct MissionOptions {
  const GroundTruthMap* terrain = nullptr;  // fixed terrain instead of a generated one
  bool keep_maps = false;                   // fill final_map and terrain
  bool local_metrics = false;               // average metrics over agents' local maps
};

MissionResult run_mission(const PlannerSpec& planner, const EnvConfig& cfg,
                          const MissionSeeds& seeds, const MissionOptions& options = {});

// Step indices ceil(B/3), ceil(2B/3), B.
std::vector<int> checkpoint_steps(int budget);

struct CheckpointStats {
  int step = 0;
  double entropy_mean = 0.0;
  double entropy_std = 0.0;
  double f1_mean = 0.0;
  double f1_std = 0.0;
};

struct TrialStats {
  std::string planner;
  std::vector<CheckpointStats> checkpoints;
  std::vector<double> final_entropy;  // per mission
  std::vector<double> final_f1;       // per mission
  std::vector<double> returns;        // per mission, undiscounted
};

struct BenchmarkOptions {
  int missions = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  const GroundTruthMap* terrain = nullptr;
  // Called once per finished mission, in mission order per planner.
  std::function<void(std::size_t planner, int mission, const MissionResult&)> on_mission;
  bool keep_maps = false;
  bool local_metrics = false;
};

TrialStats summarize(const std::string& label, std::span<const MissionResult> missions,
                     int budget);

std::vector<TrialStats> run_benchmark(std::span<const PlannerSpec> planners,
                                      const EnvConfig& cfg, const BenchmarkOptions& options);

void write_benchmark_csv(std::ostream& os, std::span<const TrialStats> stats);
void write_mission_metrics_header(std::ostream& os);
void write_mission_metrics(std::ostream& os, const std::string& planner, int mission,
                           const MissionResult& result);

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);  // n - 1 denominator; 0 for n < 2

struct TestResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
  double mean_difference = 0.0;  // mean(a) - mean(b)
};

TestResult paired_t_test(std::span<const double> a, std::span<const double> b);
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace mipp
