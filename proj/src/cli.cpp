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

#include "mipp/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "mipp/coma.hpp"
#include "mipp/config.hpp"
#include "mipp/evaluation.hpp"
#include "mipp/planners.hpp"
#include "mipp/raster.hpp"

#ifndef MIPP_VERSION
#define MIPP_VERSION "unknown"
#endif

namespace mipp {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfig: return kExitUsage;
    case ErrorKind::kParse:
    case ErrorKind::kData:
    case ErrorKind::kDegenerate:
    case ErrorKind::kInvalidPosition:
    case ErrorKind::kInvalidMeasurement: return kExitData;
    case ErrorKind::kDivergence: return kExitDivergence;
    default: return kExitFailure;
  }
}

namespace {

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 1;
  std::vector<std::string> sets;  // key=value overrides
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kData, "cannot write '" + path.string() + "'");
  return os;
}

RunConfig load_run_config(const GlobalOptions& g, bool strict, bool validate = true) {
  ConfigFile file;
  if (!g.config.empty()) {
    file = load_config(g.config);
  } else if (strict) {
    fail(ErrorKind::kUsage, "--config is required");
  }
  for (const std::string& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kUsage, "--set expects key=value, got '" + kv + "'");
    file.values[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return resolve_config(file, strict, validate);
}

void validate(const RunConfig& cfg) {
  cfg.env.validate();
  cfg.train.validate();
}

// Written before any other output of a command.
void write_manifest(const fs::path& dir, const std::string& command, const GlobalOptions& g,
                    const RunConfig& cfg, const std::vector<std::string>& outputs) {
  fs::create_directories(dir);
  {
    std::ofstream os = open_out(dir / "manifest.txt");
    os << "version: " << MIPP_VERSION << '\n'
       << "command: " << command << '\n'
       << "seed: " << g.seed << '\n'
       << "threads: " << g.threads << '\n'
       << "outputs:";
    for (const auto& o : outputs) os << ' ' << o;
    os << "\nconfig:\n";
    std::istringstream lines(config_to_text(cfg));
    for (std::string line; std::getline(lines, line);) os << "  " << line << '\n';
  }
  std::ofstream cfg_os = open_out(dir / "config.cfg");
  cfg_os << config_to_text(cfg);
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "mipp";
  for (const auto& a : args) s += " " + a;
  return s;
}

// ---- train ----------------------------------------------------------------

TrainResult train_into(const fs::path& dir, const RunConfig& cfg, const GlobalOptions& g,
                       const std::string& command, std::ostream& err) {
  write_manifest(dir, command, g, cfg,
                 {"training_log.csv", "missions.csv", "checkpoints/final.ckpt"});
  fs::create_directories(dir / "checkpoints");
  std::ofstream log = open_out(dir / "training_log.csv");
  std::ofstream missions = open_out(dir / "missions.csv");
  TrainOutputs outputs;
  outputs.log = &log;
  outputs.missions = &missions;
  outputs.threads = g.threads;
  outputs.metadata.emplace_back("config", config_to_text(cfg));
  outputs.on_checkpoint = [&](const std::string& name, const nn::Checkpoint& ckpt) {
    std::ofstream os = open_out(dir / "checkpoints" / (name + ".ckpt"));
    nn::write_checkpoint(os, ckpt);
  };
  outputs.on_block = [&](const BlockLog& b) {
    err << "block " << b.block << ": missions " << b.missions_done << ", mean return "
        << b.mean_return << ", epsilon " << b.epsilon << '\n';
  };
  return train(cfg.env, cfg.train, g.seed, outputs);
}

// ---- evaluate --------------------------------------------------------------

struct EvalOptions {
  std::vector<std::string> planners{"greedy-ig"};
  std::string actor_weights;
  std::string mode = "sample";
  std::optional<int> agents;
  std::optional<std::string> comm_radius;
  int missions = 50;
  bool dump_maps = false;
  bool local_metrics = false;
  std::string raster;
  double threshold = 25.0;
};

double parse_radius(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double r = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !(r >= 0.0)) {
    fail(ErrorKind::kUsage, "--comm-radius expects a non-negative number or inf, got '" + s + "'");
  }
  return r;
}

// Sets the terrain extent and map resolution from a raster.
void fit_env_to_terrain(EnvConfig& env, const GroundTruthMap& terrain) {
  require(terrain.width() == terrain.height(), ErrorKind::kData,
          "raster must be square, got " + std::to_string(terrain.width()) + "x" +
              std::to_string(terrain.height()));
  env.map_resolution = terrain.resolution();
  env.terrain_side = terrain.width() * terrain.resolution();
}

std::vector<PlannerSpec> planner_specs(const EvalOptions& e, const RunConfig& cfg) {
  std::vector<PlannerSpec> specs;
  for (const std::string& name : e.planners) {
    PlannerSpec s;
    s.kind = parse_planner_kind(name);
    s.coverage_altitude = cfg.coverage_altitude;
    if (s.kind == PlannerKind::kLearned) {
      if (e.actor_weights.empty()) {
        fail(ErrorKind::kUsage, "the learned planner requires --actor-weights");
      }
      std::ifstream in(e.actor_weights, std::ios::binary);
      if (!in) fail(ErrorKind::kUsage, "cannot open actor weights '" + e.actor_weights + "'");
      LoadedActor loaded = load_actor(nn::read_checkpoint(in));
      s.actor = std::make_shared<const ConvNet>(std::move(loaded.actor));
      s.features = loaded.features;
      s.mode = e.mode == "argmax" ? SampleMode::kArgmax : SampleMode::kSample;
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<TrialStats> evaluate_into(const fs::path& dir, RunConfig cfg, const EvalOptions& e,
                                      const GlobalOptions& g, const std::string& command,
                                      std::ostream& err) {
  if (e.missions < 2) fail(ErrorKind::kUsage, "--missions must be >= 2");
  if (e.agents) cfg.env.num_agents = *e.agents;
  if (e.comm_radius) cfg.env.comm_radius = parse_radius(*e.comm_radius);
  std::optional<GroundTruthMap> terrain;
  if (!e.raster.empty()) {
    IngestResult r = ingest_raster_file(e.raster, e.threshold);
    if (r.warning) err << "warning: " << *r.warning << '\n';
    fit_env_to_terrain(cfg.env, r.map);
    terrain = std::move(r.map);
  }
  validate(cfg);
  const std::vector<PlannerSpec> specs = planner_specs(e, cfg);

  std::vector<std::string> outputs{"benchmark.csv", "missions.csv"};
  if (e.dump_maps) outputs.emplace_back("maps/");
  write_manifest(dir, command, g, cfg, outputs);
  if (e.dump_maps) fs::create_directories(dir / "maps");

  std::ofstream missions = open_out(dir / "missions.csv");
  write_mission_metrics_header(missions);
  BenchmarkOptions bo;
  bo.missions = e.missions;
  bo.seed = g.seed;
  bo.threads = g.threads;
  bo.terrain = terrain ? &*terrain : nullptr;
  bo.keep_maps = e.dump_maps;
  bo.local_metrics = e.local_metrics;
  bo.on_mission = [&](std::size_t p, int m, const MissionResult& r) {
    const std::string label = specs[p].label();
    write_mission_metrics(missions, label, m, r);
    if (e.dump_maps) {
      const std::string stem = label + "_" + std::to_string(m);
      std::ofstream pgm = open_out(dir / "maps" / (stem + ".pgm"));
      write_pgm(pgm, *r.final_map);
      std::ofstream ep = open_out(dir / "maps" / (stem + "_episode.csv"));
      write_episode_csv(ep, r.log);
    }
  };
  std::vector<TrialStats> stats = run_benchmark(specs, cfg.env, bo);
  std::ofstream bench = open_out(dir / "benchmark.csv");
  write_benchmark_csv(bench, stats);
  for (const TrialStats& s : stats) {
    err << s.planner << ": final roi entropy " << s.checkpoints.back().entropy_mean << " +- "
        << s.checkpoints.back().entropy_std << ", F1 " << s.checkpoints.back().f1_mean << '\n';
  }
  return stats;
}

// ---- ablate-features -------------------------------------------------------

struct Toggle {
  std::string name;
  Plane plane;
  bool on;
};

Toggle parse_toggle(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    fail(ErrorKind::kUsage, "--toggle expects plane=on or plane=off, got '" + text + "'");
  }
  const std::string value = text.substr(eq + 1);
  if (value != "on" && value != "off") {
    fail(ErrorKind::kUsage, "--toggle value must be on or off, got '" + value + "'");
  }
  return {text.substr(0, eq) + "-" + value, parse_plane(text.substr(0, eq)), value == "on"};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent informative path planning: training, evaluation and data tools",
               "mipp"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration file (key = value)");
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--out", g.out, "Output directory (or file for synth-raster)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", g.sets, "Override a config key (key=value), repeatable");

  auto* train_cmd = app.add_subcommand("train", "Train actor and critic networks");
  train_cmd->fallthrough();
  std::string variant;
  train_cmd->add_option("--variant", variant,
                        "coma, central-qv, actor-independent or decentralised");

  auto* eval_cmd = app.add_subcommand("evaluate", "Benchmark planners on seeded missions");
  eval_cmd->fallthrough();
  EvalOptions e;
  int agents = 0;
  std::string radius;
  eval_cmd->add_option("--planner", e.planners, "random, coverage, greedy-ig or learned")
      ->delimiter(',');
  eval_cmd->add_option("--actor-weights", e.actor_weights, "Checkpoint with an actor network");
  eval_cmd->add_option("--mode", e.mode, "Learned planner mode")
      ->check(CLI::IsMember({"sample", "argmax"}));
  eval_cmd->add_option("--agents", agents, "Team size override")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--comm-radius", radius, "Communication radius in meters, or inf");
  eval_cmd->add_option("--missions", e.missions, "Missions per planner (>= 2)");
  eval_cmd->add_flag("--dump-maps", e.dump_maps, "Write final belief maps and episode logs");
  eval_cmd->add_flag("--local-metrics", e.local_metrics,
                     "Average metrics over agents' local maps instead of the global map");
  eval_cmd->add_option("--raster", e.raster, "Text raster used as fixed ground truth");
  eval_cmd->add_option("--threshold", e.threshold, "Raster threshold");

  auto* ablate_cmd = app.add_subcommand("ablate-features", "Train and evaluate feature toggles");
  ablate_cmd->fallthrough();
  std::vector<std::string> toggles;
  std::vector<std::string> variants;
  int eval_missions = 20;
  ablate_cmd->add_option("--toggle", toggles, "plane=on|off, one run per toggle");
  ablate_cmd->add_option("--variants", variants, "Extra runs per training variant")
      ->delimiter(',');
  ablate_cmd->add_option("--eval-missions", eval_missions, "Evaluation missions per run");

  auto* ingest_cmd = app.add_subcommand("ingest", "Threshold a text raster into ground truth");
  ingest_cmd->fallthrough();
  std::string raster_path;
  double threshold = 25.0;
  ingest_cmd->add_option("--raster", raster_path, "Input raster")->required();
  ingest_cmd->add_option("--threshold", threshold, "Interesting iff value >= threshold");

  auto* sweep_cmd =
      app.add_subcommand("sweep-coverage-altitude", "Benchmark coverage at every altitude");
  sweep_cmd->fallthrough();
  int sweep_missions = 50;
  sweep_cmd->add_option("--missions", sweep_missions, "Missions per altitude (>= 2)");

  auto* synth_cmd = app.add_subcommand("synth-raster", "Write a synthetic temperature raster");
  synth_cmd->fallthrough();
  int size = 500;
  double resolution = 0.08;
  synth_cmd->add_option("--size", size, "Cells per side");
  synth_cmd->add_option("--resolution", resolution, "Meters per cell");

  auto* print_cmd = app.add_subcommand("print-config", "Print the resolved configuration");
  print_cmd->fallthrough();
  bool strict = false;
  print_cmd->add_flag("--strict", strict, "Require every key");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe, out, err);
    return kExitUsage;
  }

  const std::string command = join_args(args);
  try {
    if (*train_cmd) {
      RunConfig cfg = load_run_config(g, true);
      if (!variant.empty()) cfg.train.variant = parse_variant(variant);
      validate(cfg);
      const TrainResult r = train_into(g.out, cfg, g, command, err);
      out << "trained " << r.mission_returns.size() << " missions; checkpoint "
          << (fs::path(g.out) / "checkpoints" / "final.ckpt").string() << '\n';
    } else if (*eval_cmd) {
      if (agents > 0) e.agents = agents;
      if (!radius.empty()) e.comm_radius = radius;
      const RunConfig cfg = load_run_config(g, false, false);  // validated after raster fitting
      evaluate_into(g.out, cfg, e, g, command, err);
      out << "wrote " << (fs::path(g.out) / "benchmark.csv").string() << '\n';
    } else if (*ablate_cmd) {
      RunConfig base = load_run_config(g, true);
      validate(base);
      std::vector<std::pair<std::string, RunConfig>> runs{{"base", base}};
      for (const std::string& t : toggles) {
        const Toggle tg = parse_toggle(t);
        RunConfig c = base;
        c.train.features.set(tg.plane, tg.on);
        runs.emplace_back(tg.name, c);
      }
      for (const std::string& v : variants) {
        RunConfig c = base;
        c.train.variant = parse_variant(v);
        runs.emplace_back("variant-" + v, c);
      }
      const fs::path root = g.out;
      write_manifest(root, command, g, base, {"ablation.csv"});
      std::ostringstream summary;
      summary << "run,variant,actor_channels,critic_channels,last20_return_mean,"
                 "eval_entropy_final_mean,eval_f1_final_mean\n"
              << std::setprecision(17);
      for (const auto& [name, c] : runs) {
        validate(c);
        const TrainResult r = train_into(root / name, c, g, command, err);
        EvalOptions ev;
        ev.planners = {"learned"};
        ev.actor_weights = (root / name / "checkpoints" / "final.ckpt").string();
        ev.missions = eval_missions;
        const auto stats = evaluate_into(root / name / "eval", c, ev, g, command, err);
        const std::size_t n = r.mission_returns.size();
        const std::size_t k = std::min<std::size_t>(20, n);
        const std::vector<double> tail(r.mission_returns.end() - static_cast<std::ptrdiff_t>(k),
                                       r.mission_returns.end());
        summary << name << ',' << variant_name(c.train.variant) << ','
                << r.nets.actor.in_channels() << ',' << r.nets.critic.in_channels() << ','
                << mean(tail) << ',' << mean(stats[0].final_entropy) << ','
                << mean(stats[0].final_f1) << '\n';
      }
      std::ofstream os = open_out(root / "ablation.csv");
      os << summary.str();
      out << "wrote " << (root / "ablation.csv").string() << '\n';
    } else if (*ingest_cmd) {
      RunConfig cfg;
      const IngestResult r = ingest_raster_file(raster_path, threshold);
      write_manifest(g.out, command, g, cfg, {"ground_truth.txt", "ground_truth.pgm"});
      {
        std::ofstream os = open_out(fs::path(g.out) / "ground_truth.txt");
        write_ground_truth_text(os, r.map);
      }
      OccupancyGrid view(r.map.width(), r.map.height(), r.map.resolution());
      for (int y = 0; y < r.map.height(); ++y) {
        for (int x = 0; x < r.map.width(); ++x) view.set(x, y, r.map.at(x, y));
      }
      std::ofstream pgm = open_out(fs::path(g.out) / "ground_truth.pgm");
      write_pgm(pgm, view);
      if (r.warning) err << "warning: " << *r.warning << '\n';
      out << "interesting fraction " << std::setprecision(6) << r.interesting_fraction << " ("
          << r.map.width() << "x" << r.map.height() << " cells at " << r.map.resolution()
          << " m)\n";
    } else if (*sweep_cmd) {
      const RunConfig cfg = load_run_config(g, false);
      validate(cfg);
      if (sweep_missions < 2) fail(ErrorKind::kUsage, "--missions must be >= 2");
      write_manifest(g.out, command, g, cfg, {"sweep.csv"});
      std::ofstream os = open_out(fs::path(g.out) / "sweep.csv");
      os << "altitude,checkpoint,entropy_mean,entropy_std,f1_mean,f1_std\n"
         << std::setprecision(17);
      double best_alt = 0.0, best_h = std::numeric_limits<double>::infinity();
      for (int l = 0; l < cfg.env.num_levels(); ++l) {
        PlannerSpec s;
        s.kind = PlannerKind::kCoverage;
        s.coverage_altitude = cfg.env.altitude(l);
        BenchmarkOptions bo;
        bo.missions = sweep_missions;
        bo.seed = g.seed;
        bo.threads = g.threads;
        const auto stats = run_benchmark(std::span(&s, 1), cfg.env, bo);
        for (const CheckpointStats& c : stats[0].checkpoints) {
          os << s.coverage_altitude << ',' << c.step << ',' << c.entropy_mean << ','
             << c.entropy_std << ',' << c.f1_mean << ',' << c.f1_std << '\n';
        }
        const double h = stats[0].checkpoints.back().entropy_mean;
        if (h < best_h) {
          best_h = h;
          best_alt = s.coverage_altitude;
        }
      }
      out << "best coverage altitude " << best_alt << " m (final roi entropy " << best_h
          << ")\n";
    } else if (*synth_cmd) {
      const TextGrid grid = synthetic_raster(size, resolution, g.seed);
      std::ofstream os = open_out(g.out);
      write_text_grid(os, grid, 6);
      out << "wrote " << g.out << '\n';
    } else if (*print_cmd) {
      out << config_to_text(load_run_config(g, strict));
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex.kind());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace mipp
