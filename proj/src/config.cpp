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

#include "mipp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "mipp/error.hpp"

namespace mipp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, sep)) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  fail(ErrorKind::kConfig, "key '" + key + "': cannot read '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(d)) bad_value(key, v, "a number");
  return d;
}

int to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    bad_value(key, v, "an integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "on" || t == "true" || t == "1") return true;
  if (t == "off" || t == "false" || t == "0") return false;
  bad_value(key, v, "on/off");
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& tok : split(v, ',')) out.push_back(to_int(key, tok));
  return out;
}

std::string fmt(double d) {
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

std::string fmt(bool b) { return b ? "on" : "off"; }

std::string fmt(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MIPP_DOUBLE(name, field)                                                         \
  Entry {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.field = to_double(name, v); },      \
        [](const RunConfig& c) { return fmt(c.field); }                                  \
  }
#define MIPP_INT(name, field)                                                            \
  Entry {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.field = to_int(name, v); },         \
        [](const RunConfig& c) { return std::to_string(c.field); }                       \
  }
#define MIPP_BOOL(name, field)                                                           \
  Entry {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.field = to_bool(name, v); },        \
        [](const RunConfig& c) { return fmt(c.field); }                                  \
  }
#define MIPP_INTS(name, field)                                                           \
  Entry {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.field = to_ints(name, v); },        \
        [](const RunConfig& c) { return fmt(c.field); }                                  \
  }

std::vector<Entry> feature_entries() {
  std::vector<Entry> out;
  for (int p = 0; p < kNumPlaneKinds; ++p) {
    const std::string key = "features." + std::string(plane_name(static_cast<Plane>(p)));
    out.push_back({key,
                   [p, key](RunConfig& c, const std::string& v) {
                     c.train.features.enabled[p] = to_bool(key, v);
                   },
                   [p](const RunConfig& c) { return fmt(c.train.features.enabled[p]); }});
  }
  return out;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> kEntries = [] {
    std::vector<Entry> all = {
      MIPP_DOUBLE("env.terrain_side", env.terrain_side),
      MIPP_DOUBLE("env.map_resolution", env.map_resolution),
      MIPP_DOUBLE("env.planning_resolution", env.planning_resolution),
      MIPP_DOUBLE("env.min_altitude", env.min_altitude),
      MIPP_DOUBLE("env.max_altitude", env.max_altitude),
      MIPP_DOUBLE("env.altitude_step", env.altitude_step),
      MIPP_INT("env.num_agents", env.num_agents),
      MIPP_INT("env.budget", env.budget),
      MIPP_DOUBLE("env.comm_radius", env.comm_radius),
      Entry{"env.sensor",
            [](RunConfig& c, const std::string& v) {
              std::vector<std::pair<double, double>> table;
              for (const std::string& item : split(v, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) bad_value("env.sensor", v, "altitude:accuracy list");
                table.emplace_back(to_double("env.sensor", item.substr(0, colon)),
                                   to_double("env.sensor", item.substr(colon + 1)));
              }
              c.env.sensor = SensorModel(std::move(table));
            },
            [](const RunConfig& c) {
              std::string s;
              for (const auto& [alt, acc] : c.env.sensor.entries()) {
                s += (s.empty() ? "" : ",") + fmt(alt) + ":" + fmt(acc);
              }
              return s;
            }},
      Entry{"env.w_interesting",
            [](RunConfig& c, const std::string& v) {
              c.env.weights = make_weights(to_double("env.w_interesting", v));
            },
            [](const RunConfig& c) { return fmt(c.env.weights.interesting); }},
      MIPP_DOUBLE("env.reward_alpha", env.reward_alpha),
      MIPP_DOUBLE("env.reward_beta", env.reward_beta),
      MIPP_DOUBLE("env.footprint_factor", env.footprint_factor),
      MIPP_DOUBLE("env.terrain_min_fraction", env.terrain_min_fraction),
      MIPP_DOUBLE("env.terrain_max_fraction", env.terrain_max_fraction),
      Entry{"train.variant",
            [](RunConfig& c, const std::string& v) { c.train.variant = parse_variant(trim(v)); },
            [](const RunConfig& c) { return std::string(variant_name(c.train.variant)); }},
      MIPP_INT("train.missions", train.missions),
      MIPP_INT("train.rollout_block", train.rollout_block),
      MIPP_INT("train.epochs", train.epochs),
      MIPP_INT("train.batch", train.batch),
      MIPP_DOUBLE("train.actor_lr", train.actor_lr),
      MIPP_DOUBLE("train.critic_lr", train.critic_lr),
      MIPP_DOUBLE("train.lambda", train.lambda),
      MIPP_DOUBLE("train.gamma", train.gamma),
      MIPP_INT("train.target_interval", train.target_interval),
      MIPP_DOUBLE("train.eps_start", train.eps_start),
      MIPP_DOUBLE("train.eps_end", train.eps_end),
      MIPP_INT("train.eps_anneal_missions", train.eps_anneal_missions),
      MIPP_BOOL("train.count_agent_decisions", train.count_agent_decisions),
      MIPP_DOUBLE("train.grad_clip", train.grad_clip),
      MIPP_INT("train.checkpoint_every", train.checkpoint_every),
      MIPP_INTS("train.conv_channels", train.arch.conv_channels),
      MIPP_INTS("train.conv_strides", train.arch.conv_strides),
      MIPP_INT("train.kernel", train.arch.kernel),
      MIPP_INTS("train.mlp_hidden", train.arch.mlp_hidden),
      MIPP_BOOL("log.wallclock", train.log_wallclock),
      MIPP_DOUBLE("eval.coverage_altitude", coverage_altitude),
    };
    for (Entry& e : feature_entries()) all.push_back(std::move(e));
    return all;
  }();
  return kEntries;
}

#undef MIPP_DOUBLE
#undef MIPP_INT
#undef MIPP_BOOL
#undef MIPP_INTS

const Entry* find_entry(const std::string& key) {
  for (const Entry& e : entries()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

}  // namespace

ConfigFile parse_config(std::istream& is) {
  ConfigFile out;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::kParse, "config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorKind::kParse, "config line " + std::to_string(number) + ": empty key");
    if (out.values.count(key)) {
      fail(ErrorKind::kParse,
           "config line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    out.values[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kUsage, "cannot open config file '" + path + "'");
  return parse_config(in);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Entry* e = find_entry(key);
  if (!e) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  e->set(cfg, value);
}

RunConfig resolve_config(const ConfigFile& file, bool strict, bool validate) {
  for (const auto& [key, value] : file.values) {
    if (!find_entry(key)) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
  RunConfig cfg;
  for (const Entry& e : entries()) {
    const auto it = file.values.find(e.key);
    if (it == file.values.end()) {
      if (strict) fail(ErrorKind::kConfig, "missing config key '" + e.key + "'");
      continue;
    }
    e.set(cfg, it->second);
  }
  if (validate) {
    cfg.env.validate();
    cfg.train.validate();
  }
  return cfg;
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) {
    const std::string v = e.get(cfg);
    out += e.key + (v.empty() ? " =" : " = " + v) + "\n";
  }
  return out;
}

}  // namespace mipp
