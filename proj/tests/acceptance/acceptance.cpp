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

// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "../test_util.hpp"
#include "mipp/cli.hpp"
#include "mipp/coma.hpp"
#include "mipp/config.hpp"
#include "mipp/error.hpp"
#include "mipp/evaluation.hpp"
#include "mipp/parallel.hpp"
#include "mipp/raster.hpp"

namespace fs = std::filesystem;
using namespace mipp;

namespace {

const std::string kSource = MIPP_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

RunConfig load(const std::string& name) {
  return resolve_config(load_config(kSource + "/configs/" + name), true);
}

// ---- 1 ---------------------------------------------------------------------

double reference_entropy(double p, double w1) {
  auto t = [](double q) { return q > 0.0 ? q * std::log2(q) : 0.0; };
  const double wp = p > 0.5 ? w1 : p < 0.5 ? 1.0 - w1 : 0.5;
  return -(wp * t(p) + (1.0 - wp) * t(1.0 - p));
}

Verdict criterion1() {
  Rng rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double entropy_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), w1 = u(rng);
    entropy_err = std::max(entropy_err, std::abs(weighted_cell_entropy(p, {w1, 1.0 - w1}) -
                                                 reference_entropy(p, w1)));
  }
  double adv_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> q(kNumActions), pi(kNumActions);
    for (int k = 0; k < kNumActions; ++k) q[k] = 20.0 * (u(rng) - 0.5), pi[k] = u(rng);
    const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& v : pi) v /= s;
    double e = 0.0;
    for (int k = 0; k < kNumActions; ++k)
      e += pi[k] * counterfactual_advantage(q, pi, static_cast<Action>(k));
    adv_err = std::max(adv_err, std::abs(e));
  }
  // Summed per-step reductions against H_0 - H_B.
  const RunConfig rc = load("smoke.cfg");
  Rng net_rng(5);
  TrainConfig tc = rc.train;
  auto actor = std::make_shared<ConvNet>(make_networks(rc.env, tc, net_rng).actor);
  std::vector<PlannerSpec> planners = {{PlannerKind::kRandom}, {PlannerKind::kCoverage},
                                       {PlannerKind::kGreedyIg}, {PlannerKind::kLearned}};
  planners[3].actor = actor;
  double tele_err = 0.0;
  for (const PlannerSpec& spec : planners) {
    for (int m = 0; m < 20; ++m) {
      const MissionResult r = run_mission(spec, rc.env, MissionSeeds::derive(202, m));
      double summed = 0.0;
      for (std::size_t t = 0; t < r.rewards.size(); ++t)
        summed += r.rewards[t] * r.entropy[t] / rc.env.reward_alpha;
      tele_err = std::max(tele_err, std::abs(summed - (r.entropy.front() - r.entropy.back())));
    }
  }
  return {entropy_err <= 1e-12 && adv_err <= 1e-10 && tele_err <= 1e-9,
          "entropy err " + fmt(entropy_err) + ", sum pi*A " + fmt(adv_err) + ", telescoping err " +
              fmt(tele_err)};
}

// ---- 2 ---------------------------------------------------------------------

Verdict criterion2() {
  using namespace mipp::nn;
  using testing::gradient_error;
  using testing::random_tensor;
  Rng rng(303);
  auto leaf = [&](Shape s) { return Var::leaf(random_tensor(std::move(s), rng), true); };
  std::map<std::string, double> errs;

  Var a = leaf({3, 4}), b = leaf({3, 4});
  Var pos = Var::leaf(Tensor({4}, {0.3, 0.9, 1.4, 2.2}), true);
  errs["elementwise"] = gradient_error({a, b}, [&] {
    return mean(scale(mul(add(a, b), sub(square(a), b)), 0.7));
  });
  errs["log"] = gradient_error({pos}, [&] { return sum(log(pos)); });
  errs["relu"] = gradient_error({a}, [&] { return sum(mul(relu(a), b)); });
  errs["reshape"] = gradient_error({a}, [&] { return sum(square(reshape(a, {2, 6}))); });
  Var x = leaf({3, 5}), w = leaf({2, 5}), bias = leaf({2});
  errs["linear"] = gradient_error({x, w, bias}, [&] { return sum(square(linear(x, w, bias))); });
  double conv = 0.0;
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      Var cx = leaf({2, 2, 5, 6}), cw = leaf({3, 2, 3, 3}), cb = leaf({3});
      conv = std::max(conv, gradient_error({cx, cw, cb}, [&] {
                        return sum(square(conv2d(cx, cw, cb, stride, pad)));
                      }));
    }
  }
  errs["conv2d"] = conv;
  Var logits = leaf({2, 6});
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1};
  const std::vector<double> eps = {0.2, 0.05};
  const std::vector<int> taken = {3, 5};
  errs["softmax+gather"] = gradient_error({logits}, [&] {
    return sum(log(gather(masked_bounded_softmax(logits, mask, eps), taken)));
  });

  // Full actor and critic graphs on a toy environment.
  EnvConfig env = testing::small_env(2, 3);
  TrainConfig tc;
  tc.arch.conv_channels = {2, 2};
  tc.arch.conv_strides = {1, 2};
  tc.arch.mlp_hidden = {4};
  Rng net_rng(7);
  ComaNetworks nets = make_networks(env, tc, net_rng);
  // Zero biases on all-zero input patches sit exactly on the relu kink.
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  for (ConvNet* net : {&nets.actor, &nets.critic}) {
    for (std::size_t i = 0; i < net->parameters().size(); ++i) {
      if (net->parameter_names()[i].ends_with(".bias")) {
        Var p = net->parameters()[i];
        for (double& v : p.mutable_value().values()) v = jitter(net_rng);
      }
    }
  }
  const MissionRollout roll = collect_mission(nets.actor, env, tc, 0, 9, 0.1);
  const InputLayout layout = input_layout(tc.features, env.num_agents, tc.variant);
  std::vector<std::size_t> idx = {0, 3};
  const Var actor_in = Var::constant(stack_inputs(roll.transitions, idx, layout.actor));
  const Var critic_in = Var::constant(stack_inputs(roll.transitions, idx, layout.critic));
  std::vector<std::uint8_t> masks;
  std::vector<int> acts;
  std::vector<double> row_eps;
  for (std::size_t i : idx) {
    const auto mb = mask_bytes(roll.transitions[i].mask);
    masks.insert(masks.end(), mb.begin(), mb.end());
    acts.push_back(static_cast<int>(roll.transitions[i].action));
    row_eps.push_back(0.1);
  }
  const Var adv = Var::constant(Tensor({2}, {0.7, -1.3}));
  errs["actor graph"] = gradient_error(nets.actor.parameters(), [&] {
    const Var lp = log(gather(masked_bounded_softmax(nets.actor.forward(actor_in), masks, row_eps), acts));
    return scale(mean(mul(lp, adv)), -1.0);
  });
  const Var targets = Var::constant(Tensor({2}, {0.4, 0.1}));
  errs["critic graph"] = gradient_error(nets.critic.parameters(), [&] {
    return mean(square(sub(gather(nets.critic.forward(critic_in), acts), targets)));
  });

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : errs) {
    if (e >= worst) worst = e, worst_name = name;
  }
  return {worst < 1e-4, std::to_string(errs.size()) + " checks, worst rel. err " + fmt(worst) +
                            " (" + worst_name + ")"};
}

// ---- 3 ---------------------------------------------------------------------

// Expected posterior map entropy after one measurement, by enumerating all
// 2^k joint outcomes and fusing each one.
double enumerated_gain(const OccupancyGrid& map, const CellRect& fp, double acc,
                       const ImportanceWeights& w) {
  const int k = fp.width() * fp.height();
  const double before = map_entropy(map, w);
  double expected_after = 0.0;
  for (int bits = 0; bits < (1 << k); ++bits) {
    Measurement m;
    m.footprint = fp;
    m.accuracy = acc;
    double prob = 1.0;
    int i = 0;
    for (int y = fp.y0; y <= fp.y1; ++y) {
      for (int x = fp.x0; x <= fp.x1; ++x, ++i) {
        const bool one = (bits >> i) & 1;
        const double p = map.at(x, y);
        const double p1 = acc * p + (1.0 - acc) * (1.0 - p);
        prob *= one ? p1 : 1.0 - p1;
        m.values.push_back(one);
      }
    }
    OccupancyGrid after = map;
    fuse_measurement(after, m);
    expected_after += prob * map_entropy(after, w);
  }
  return before - expected_after;
}

Verdict criterion3() {
  Rng rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int matches = 0, instances = 0, max_cells = 0;
  std::string first_mismatch;
  for (int inst = 0; inst < 300; ++inst) {
    EnvConfig cfg;
    cfg.terrain_side = 12.0;
    cfg.planning_resolution = 2.0;
    cfg.map_resolution = 1.0;
    cfg.min_altitude = 4.0;
    cfg.max_altitude = 5.0;
    cfg.altitude_step = 1.0;
    cfg.footprint_factor = 0.4;  // 2 x 2 cells at both altitudes
    const double a_hi = 0.6 + 0.39 * u(rng);
    cfg.sensor = SensorModel({{4.0, a_hi}, {5.0, 0.5 + (a_hi - 0.5) * u(rng)}});
    const double w1 = u(rng);
    cfg.weights = {w1, 1.0 - w1};
    cfg.num_agents = 1 + static_cast<int>(u(rng) * 3);

    AgentLocalState local;
    local.map = OccupancyGrid(12, 12, 1.0);
    for (double& p : local.map.cells()) {
      const double r = u(rng);
      p = r < 0.1 ? OccupancyGrid::kMaxProbability : r < 0.2 ? 0.5 : 0.02 + 0.96 * u(rng);
    }
    GlobalState g;
    while (static_cast<int>(g.positions.size()) < cfg.num_agents) {
      const LatticePos p{static_cast<int>(u(rng) * 6), static_cast<int>(u(rng) * 6),
                         static_cast<int>(u(rng) * 2)};
      bool clash = false;
      for (const auto& q : g.positions) clash |= q.same_cell_2d(p);
      if (!clash) g.positions.push_back(p);
    }
    local.position = g.positions[0];
    const ActionMask mask = valid_actions(g, cfg, 0);

    std::optional<Action> best;
    double best_gain = 0.0;
    for (Action a : kAllActions) {
      if (!mask[static_cast<int>(a)]) continue;
      const LatticePos next = apply(a, local.position);
      const CellRect fp = footprint(cfg.position(next), cfg.footprint_factor, 12, 12, 1.0);
      max_cells = std::max(max_cells, fp.width() * fp.height());
      const double gain = enumerated_gain(local.map, fp, cfg.sensor.accuracy(cfg.altitude(next.level)),
                                          cfg.weights);
      const double tol = 1e-9 * std::max({1.0, std::abs(gain), std::abs(best_gain)});
      if (!best || gain > best_gain + tol) best = a, best_gain = gain;
    }
    const Action chosen = greedy_ig_action(local, mask, cfg);
    ++instances;
    if (chosen == *best) {
      ++matches;
    } else if (first_mismatch.empty()) {
      first_mismatch = "; instance " + std::to_string(inst) + " chose " +
                       std::string(action_name(chosen)) + " vs " + std::string(action_name(*best));
    }
  }
  return {matches == instances && max_cells <= 4,
          std::to_string(matches) + "/" + std::to_string(instances) +
              " instances match, largest footprint " + std::to_string(max_cells) + " cells" +
              first_mismatch};
}

// ---- 4 and 5 ---------------------------------------------------------------

std::vector<TrialStats> bench(const EnvConfig& env, std::vector<PlannerSpec> planners, int missions,
                              std::uint64_t seed, const GroundTruthMap* terrain = nullptr) {
  BenchmarkOptions o;
  o.missions = missions;
  o.seed = seed;
  o.threads = default_threads();
  o.terrain = terrain;
  return run_benchmark(planners, env, o);
}

Verdict criterion4() {
  const RunConfig rc = load("paper.cfg");
  EnvConfig env = rc.env;
  env.num_agents = 4;
  env.budget = 15;
  PlannerSpec coverage{PlannerKind::kCoverage};
  coverage.coverage_altitude = rc.coverage_altitude;
  const auto s = bench(env, {{PlannerKind::kGreedyIg}, coverage, {PlannerKind::kRandom}}, 50, 4004);
  const TrialStats &ig = s[0], &cov = s[1], &rnd = s[2];
  const TestResult h_cov = paired_t_test(ig.final_entropy, cov.final_entropy);
  const TestResult h_rnd = paired_t_test(ig.final_entropy, rnd.final_entropy);
  const TestResult f_cov = paired_t_test(ig.final_f1, cov.final_f1);
  const bool ok = h_cov.mean_difference < 0 && h_cov.p_two_sided < 0.05 &&
                  h_rnd.mean_difference < 0 && h_rnd.p_two_sided < 0.05 &&
                  f_cov.mean_difference > 0 && f_cov.p_two_sided < 0.05;
  return {ok, "entropy IG " + fmt(mean(ig.final_entropy)) + " / coverage " +
                  fmt(mean(cov.final_entropy)) + " / random " + fmt(mean(rnd.final_entropy)) +
                  " (p " + fmt(h_cov.p_two_sided, 2) + ", " + fmt(h_rnd.p_two_sided, 2) +
                  "); F1 IG " + fmt(mean(ig.final_f1)) + " vs coverage " + fmt(mean(cov.final_f1)) +
                  " (p " + fmt(f_cov.p_two_sided, 2) + ")"};
}

Verdict criterion5() {
  const RunConfig rc = load("paper.cfg");
  std::vector<double> means;
  for (int n : {2, 4, 8}) {
    EnvConfig env = rc.env;
    env.num_agents = n;
    means.push_back(mean(bench(env, {{PlannerKind::kGreedyIg}}, 50, 5005)[0].final_entropy));
  }
  return {means[0] > means[1] && means[1] > means[2],
          "greedy IG final entropy 2/4/8 agents: " + fmt(means[0]) + " / " + fmt(means[1]) + " / " +
              fmt(means[2])};
}

// ---- 6 ---------------------------------------------------------------------

Verdict criterion6() {
  const RunConfig rc = load("smoke.cfg");
  const std::uint64_t seed = 7;
  TrainOutputs out;
  out.threads = default_threads();
  const TrainResult r = train(rc.env, rc.train, seed, out);
  const std::vector<double> trained(r.mission_returns.end() - 20, r.mission_returns.end());
  std::vector<double> untrained;
  for (int m = 0; m < 20; ++m) {
    untrained.push_back(
        collect_mission(r.initial_actor, rc.env, rc.train, 100000 + m, seed, 0.0).total_return);
  }
  const TestResult t = welch_t_test(trained, untrained);
  return {t.mean_difference > 0 && t.p_two_sided < 0.05,
          std::to_string(r.mission_returns.size()) + " missions; last-20 return " +
              fmt(mean(trained)) + " vs untrained " + fmt(mean(untrained)) + " (Welch p " +
              fmt(t.p_two_sided, 2) + ")"};
}

// ---- 7 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Verdict criterion7() {
  const fs::path root = fs::temp_directory_path() / "mipp_acceptance_determinism";
  fs::remove_all(root);
  const std::string cfg = kSource + "/configs/smoke.cfg";
  std::string failure;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    // Different thread counts on the two runs.
    const std::string threads = run == 0 ? "1" : "3";
    std::ostringstream o, e;
    int code = run_cli({"--config", cfg, "--seed", "21", "--threads", threads, "--set",
                        "train.missions=40", "--out", (dir / "train").string(), "train"},
                       o, e);
    if (code != 0) failure = "train exit " + std::to_string(code) + ": " + e.str();
    code = run_cli({"--config", cfg, "--seed", "22", "--threads", threads, "--out",
                    (dir / "eval").string(), "evaluate", "--planner",
                    "random,coverage,greedy-ig,learned", "--actor-weights",
                    (dir / "train" / "checkpoints" / "final.ckpt").string(), "--missions", "6"},
                   o, e);
    if (code != 0 && failure.empty()) failure = "evaluate exit " + std::to_string(code) + ": " + e.str();
  }
  if (!failure.empty()) return {false, failure};
  const std::vector<std::string> files = {"train/training_log.csv", "train/missions.csv",
                                          "eval/benchmark.csv", "eval/missions.csv"};
  std::size_t bytes = 0;
  for (const std::string& f : files) {
    const std::string a = slurp(root / "run0" / f), b = slurp(root / "run1" / f);
    if (a.empty() || a != b) return {false, f + " differs between runs"};
    bytes += a.size();
  }
  const bool ckpt_same = slurp(root / "run0/train/checkpoints/final.ckpt") ==
                         slurp(root / "run1/train/checkpoints/final.ckpt");
  fs::remove_all(root);
  return {ckpt_same, std::to_string(files.size()) + " CSV files (" + std::to_string(bytes) +
                         " bytes) identical across runs with 1 and 3 threads; checkpoint " +
                         (ckpt_same ? "identical" : "differs")};
}

// ---- 8 ---------------------------------------------------------------------

Verdict criterion8() {
  const RunConfig rc = load("smoke.cfg");
  Rng rng(808);
  const ComaNetworks nets = make_networks(rc.env, rc.train, rng);
  const InputLayout layout = input_layout(rc.train.features, rc.env.num_agents, rc.train.variant);
  const double gamma = rc.train.gamma;
  double err_mc = 0.0, err_td = 0.0;
  for (int m = 0; m < 50; ++m) {
    const MissionRollout roll = collect_mission(nets.actor, rc.env, rc.train, m, 808, 0.3);
    for (int agent = 0; agent < rc.env.num_agents; ++agent) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < roll.transitions.size(); ++i)
        if (roll.transitions[i].agent == agent) idx.push_back(i);
      const nn::Tensor in = stack_inputs(roll.transitions, idx, layout.critic);
      std::vector<double> r, q;
      std::vector<double> qall;
      {
        nn::NoGradGuard guard;
        const nn::Var out = nets.target.forward(nn::Var::constant(in));
        qall.assign(out.value().values().begin(), out.value().values().end());
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Transition& t = roll.transitions[idx[k]];
        r.push_back(t.reward);
        q.push_back(qall[k * kNumActions + static_cast<int>(t.action)]);
      }
      const auto g1 = td_lambda_targets(r, q, 1.0, gamma);
      const auto g0 = td_lambda_targets(r, q, 0.0, gamma);
      const std::size_t T = r.size();
      for (std::size_t t = 0; t < T; ++t) {
        double mc = 0.0, disc = 1.0;
        for (std::size_t k = t; k < T; ++k, disc *= gamma) mc += disc * r[k];
        const double one_step = t + 1 < T ? r[t] + gamma * q[t + 1] : r[t];
        err_mc = std::max(err_mc, std::abs(g1[t] - mc));
        err_td = std::max(err_td, std::abs(g0[t] - one_step));
      }
    }
  }
  return {err_mc <= 1e-9 && err_td <= 1e-9,
          "50 episodes; lambda=1 vs Monte Carlo err " + fmt(err_mc) + ", lambda=0 vs one-step err " +
              fmt(err_td)};
}

// ---- 9 ---------------------------------------------------------------------

Verdict criterion9() {
  const fs::path root = fs::temp_directory_path() / "mipp_acceptance_raster";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path raster = root / "raster.txt";
  {
    std::ofstream os(raster);
    write_text_grid(os, synthetic_raster(500, 0.08, 909), 6);
  }
  const IngestResult ingest = ingest_raster_file(raster.string(), 25.0);
  std::ostringstream o, e;
  const int code = run_cli({"--config", kSource + "/configs/paper.cfg", "--seed", "9", "--set",
                            "env.planning_resolution=4", "--out", (root / "eval").string(),
                            "evaluate", "--planner", "random,coverage,greedy-ig", "--raster",
                            raster.string(), "--threshold", "25", "--missions", "20"},
                           o, e);
  if (code != 0) return {false, "evaluate exit " + std::to_string(code) + ": " + e.str()};
  std::map<std::string, double> final_entropy;
  std::istringstream csv(slurp(root / "eval" / "benchmark.csv"));
  std::string line;
  std::getline(csv, line);
  const RunConfig rc = load("paper.cfg");
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string planner, step, h;
    std::getline(ls, planner, ',');
    std::getline(ls, step, ',');
    std::getline(ls, h, ',');
    if (std::stoi(step) == rc.env.budget) final_entropy[planner] = std::stod(h);
  }
  fs::remove_all(root);
  if (final_entropy.size() != 3) return {false, "benchmark.csv lacks final rows"};
  const double ig = final_entropy["greedy-ig"];
  return {ig < final_entropy["coverage"] && ig < final_entropy["random"],
          "interesting fraction " + fmt(ingest.interesting_fraction, 3) +
              "; final entropy IG " + fmt(ig) + " / coverage " + fmt(final_entropy["coverage"]) +
              " / random " + fmt(final_entropy["random"])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"equation oracles", criterion1},
      {"gradient correctness", criterion2},
      {"greedy IG matches exhaustive enumeration", criterion3},
      {"baseline ordering at full scale", criterion4},
      {"team-size monotonicity", criterion5},
      {"learning progress at desk scale", criterion6},
      {"determinism", criterion7},
      {"TD(lambda) limits", criterion8},
      {"raster pipeline", criterion9},
  };
  // Optional argument: comma-free list of criterion numbers to run.
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[k - 1] = true;
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << v.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
