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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mipp/cli.hpp"
#include "mipp/config.hpp"
#include "mipp/error.hpp"
#include "mipp/raster.hpp"

namespace mipp {
namespace {

namespace fs = std::filesystem;

const std::string kSmoke = std::string(MIPP_SOURCE_DIR) + "/configs/smoke.cfg";

// Shrinks the smoke configuration to a few seconds of work.
const std::vector<std::string> kTinyOverrides = {
    "--set", "train.missions=4",        "--set", "train.rollout_block=32",
    "--set", "train.batch=16",          "--set", "train.conv_channels=4",
    "--set", "train.conv_strides=2",    "--set", "train.mlp_hidden=8",
    "--set", "env.map_resolution=1",    "--set", "train.epochs=1"};

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mipp_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// ---- configuration ---------------------------------------------------------

TEST(Config, ParsesCommentsAndWhitespace) {
  std::istringstream is("# header\n\n  env.budget = 7   # trailing\nenv.num_agents=3\n");
  const ConfigFile f = parse_config(is);
  EXPECT_EQ(f.values.at("env.budget"), "7");
  EXPECT_EQ(f.values.at("env.num_agents"), "3");
  const RunConfig c = resolve_config(f, false);
  EXPECT_EQ(c.env.budget, 7);
  EXPECT_EQ(c.env.num_agents, 3);
}

TEST(Config, MalformedLineNamesLine) {
  std::istringstream is("env.budget = 7\nnot a pair\n");
  try {
    parse_config(is);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, DuplicateAndUnknownKeys) {
  std::istringstream dup("env.budget = 7\nenv.budget = 8\n");
  EXPECT_THROW(parse_config(dup), Error);
  std::istringstream unk("env.colour = blue\n");
  try {
    resolve_config(parse_config(unk), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(Config, StrictModeNamesMissingKey) {
  std::istringstream is("env.budget = 7\n");
  try {
    resolve_config(parse_config(is), true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("missing config key"), std::string::npos);
  }
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig c;
  apply_config_value(c, "train.actor_lr", "3.3e-5");
  apply_config_value(c, "env.comm_radius", "inf");
  apply_config_value(c, "features.budget", "off");
  apply_config_value(c, "train.conv_channels", "8,8");
  apply_config_value(c, "train.conv_strides", "1,2");
  const std::string text = config_to_text(c);
  std::istringstream is(text);
  const RunConfig back = resolve_config(parse_config(is), true);
  EXPECT_EQ(config_to_text(back), text);
  EXPECT_EQ(back.train.actor_lr, 3.3e-5);
  EXPECT_TRUE(std::isinf(back.env.comm_radius));
  EXPECT_FALSE(back.train.features.on(Plane::kBudget));
}

TEST(Config, ShippedConfigsAreComplete) {
  for (const char* name : {"/configs/paper.cfg", "/configs/smoke.cfg"}) {
    const ConfigFile f = load_config(std::string(MIPP_SOURCE_DIR) + name);
    EXPECT_NO_THROW(resolve_config(f, true)) << name;
    EXPECT_EQ(f.values.size(), config_keys().size()) << name;
  }
}

TEST(Config, BadValuesAreConfigErrors) {
  RunConfig c;
  for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"env.budget", "seven"}, {"train.count_agent_decisions", "maybe"},
           {"env.sensor", "5:abc"}, {"train.variant", "iql"}}) {
    EXPECT_THROW(apply_config_value(c, k, v), Error) << k;
  }
}

// ---- raster ingestion ------------------------------------------------------

TEST(Raster, ThresholdIsInclusive) {
  std::istringstream is("3 2 1\n10 20 30\n15 25 35\n");
  const IngestResult r = ingest_raster(is, 25.0);
  EXPECT_EQ(r.map.width(), 3);
  EXPECT_EQ(r.map.at(1, 0), 1);  // southern row is the last text line
  EXPECT_EQ(r.map.at(0, 0), 0);
  EXPECT_EQ(r.map.at(2, 1), 1);
  EXPECT_DOUBLE_EQ(r.interesting_fraction, 3.0 / 6.0);
  EXPECT_FALSE(r.warning.has_value());
}

TEST(Raster, SingleClassWarns) {
  std::istringstream is("2 1 1\n1 2\n");
  const IngestResult r = ingest_raster(is, 5.0);
  EXPECT_EQ(r.interesting_fraction, 0.0);
  EXPECT_TRUE(r.warning.has_value());
}

TEST(Raster, MissingFileIsDataError) {
  try {
    ingest_raster_file("/nonexistent/raster.txt", 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(Raster, SyntheticFieldIsSeededAndBounded) {
  const TextGrid a = synthetic_raster(60, 0.5, 3), b = synthetic_raster(60, 0.5, 3);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, synthetic_raster(60, 0.5, 4).values);
  const auto [lo, hi] = std::minmax_element(a.values.begin(), a.values.end());
  EXPECT_GT(*lo, 10.0);
  EXPECT_LT(*hi, 40.0);
}

// ---- exit codes ------------------------------------------------------------

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kUsage), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::kParse), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::kData), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::kDegenerate), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidPosition), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidMeasurement), kExitData);
  EXPECT_EQ(exit_code_for(ErrorKind::kDivergence), kExitDivergence);
  EXPECT_EQ(exit_code_for(ErrorKind::kContract), kExitFailure);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"evaluate", "--planner", "astar"}).code, kExitUsage);
  EXPECT_EQ(cli({"evaluate", "--missions", "1"}).code, kExitUsage);
  EXPECT_EQ(cli({"--config", "/nonexistent.cfg", "print-config"}).code, kExitUsage);
  EXPECT_EQ(cli({"--set", "env.colour=blue", "print-config"}).code, kExitUsage);
}

TEST(Cli, TrainNeedsCompleteConfig) {
  const fs::path dir = scratch("strict");
  std::ofstream(dir / "partial.cfg") << "env.budget = 4\n";
  const CliRun r = cli({"--config", (dir / "partial.cfg").string(), "--out", (dir / "o").string(),
                     "train"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("missing config key"), std::string::npos) << r.err;
}

TEST(Cli, IngestBadRasterIsDataError) {
  const fs::path dir = scratch("badraster");
  std::ofstream(dir / "r.txt") << "2 2 1\n1 2\n3\n";
  const CliRun r = cli({"--out", (dir / "o").string(), "ingest", "--raster",
                     (dir / "r.txt").string(), "--threshold", "2"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, IngestWritesGroundTruth) {
  const fs::path dir = scratch("ingest");
  std::ofstream(dir / "r.txt") << "2 2 1\n1 5\n3 7\n";
  const CliRun r = cli({"--out", (dir / "o").string(), "ingest", "--raster",
                     (dir / "r.txt").string(), "--threshold", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "o" / "ground_truth.txt"));
  EXPECT_TRUE(fs::exists(dir / "o" / "ground_truth.pgm"));
  EXPECT_NE(r.out.find("0.5"), std::string::npos) << r.out;
}

TEST(Cli, PrintConfigIsCanonical) {
  const CliRun r = cli({"--config", kSmoke, "--set", "env.budget=9", "print-config", "--strict"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("env.budget = 9\n"), std::string::npos);
  std::istringstream is(r.out);
  EXPECT_NO_THROW(resolve_config(parse_config(is), true));
}

TEST(Cli, TrainThenEvaluateLearned) {
  const fs::path dir = scratch("train_eval");
  std::vector<std::string> args = {"--config", kSmoke, "--seed", "5", "--out",
                                   (dir / "t").string()};
  args.insert(args.end(), kTinyOverrides.begin(), kTinyOverrides.end());
  args.push_back("train");
  const CliRun t = cli(args);
  ASSERT_EQ(t.code, 0) << t.err;
  for (const char* f : {"manifest.txt", "config.cfg", "training_log.csv", "missions.csv",
                        "checkpoints/final.ckpt"})
    EXPECT_TRUE(fs::exists(dir / "t" / f)) << f;

  std::vector<std::string> ev = {"--config", (dir / "t" / "config.cfg").string(), "--seed", "2",
                                 "--out", (dir / "e").string(), "evaluate", "--planner",
                                 "learned,random", "--actor-weights",
                                 (dir / "t" / "checkpoints" / "final.ckpt").string(),
                                 "--missions", "2", "--dump-maps"};
  const CliRun e = cli(ev);
  ASSERT_EQ(e.code, 0) << e.err;
  const std::string bench = slurp(dir / "e" / "benchmark.csv");
  EXPECT_EQ(std::count(bench.begin(), bench.end(), '\n'), 7);  // header + 2 planners x 3
  EXPECT_NE(bench.find("learned,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "e" / "maps" / "learned_0.pgm"));
}

TEST(Cli, EvaluateLearnedWithoutWeightsIsUsageError) {
  const fs::path dir = scratch("noweights");
  const CliRun r = cli({"--config", kSmoke, "--out", (dir / "e").string(), "evaluate", "--planner",
                     "learned", "--missions", "2"});
  EXPECT_EQ(r.code, kExitUsage) << r.err;
}

TEST(Cli, EvaluateWithCorruptWeightsIsDataError) {
  const fs::path dir = scratch("corrupt");
  std::ofstream(dir / "w.ckpt") << "garbage";
  const CliRun r = cli({"--config", kSmoke, "--out", (dir / "e").string(), "evaluate", "--planner",
                     "learned", "--actor-weights", (dir / "w.ckpt").string(), "--missions", "2"});
  EXPECT_EQ(r.code, kExitData) << r.err;
}

TEST(Cli, RasterExtentIsAppliedBeforeValidation) {
  // 20 m raster with a 4 m lattice; the 50 m default side is not a multiple of 4.
  const fs::path dir = scratch("raster_eval");
  const CliRun s = cli({"--seed", "1", "--out", (dir / "r.txt").string(), "synth-raster", "--size",
                        "20", "--resolution", "1"});
  ASSERT_EQ(s.code, 0) << s.err;
  const CliRun e = cli({"--config", kSmoke, "--set", "env.planning_resolution=4", "--out",
                        (dir / "e").string(), "evaluate", "--planner", "greedy-ig", "--raster",
                        (dir / "r.txt").string(), "--threshold", "25", "--missions", "2"});
  EXPECT_EQ(e.code, 0) << e.err;
  const CliRun bad = cli({"--config", kSmoke, "--set", "env.planning_resolution=3", "--out",
                          (dir / "e2").string(), "evaluate", "--raster", (dir / "r.txt").string(),
                          "--missions", "2"});
  EXPECT_EQ(bad.code, kExitUsage);
}

TEST(Cli, SweepReportsBestAltitude) {
  const fs::path dir = scratch("sweep");
  const CliRun r = cli({"--config", kSmoke, "--set", "env.map_resolution=1", "--out",
                     (dir / "s").string(), "sweep-coverage-altitude", "--missions", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "s" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);  // 3 altitudes x 3 checkpoints
  EXPECT_NE(r.out.find("altitude"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace mipp
