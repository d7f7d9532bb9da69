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

// key = value run configuration covering the environment, training and
// evaluation settings.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mipp/coma.hpp"
#include "mipp/environment.hpp"

namespace mipp {

struct RunConfig {
  EnvConfig env;
  TrainConfig train;
  double coverage_altitude = 10.0;
};

// Raw key/value pairs. Lines are
// `key = value`; `#` starts a comment; blank lines are ignored.
struct ConfigFile {
  std::map<std::string, std::string> values;
};

ConfigFile parse_config(std::istream& is);
ConfigFile load_config(const std::string& path);

// Every recognised key, in canonical order.
const std::vector<std::string>& config_keys();

// Applies the file on top of defaults. Unknown keys are configuration
// errors. In strict mode every recognised key must be present. With
// `validate` off the caller must validate after its own adjustments.
RunConfig resolve_config(const ConfigFile& file, bool strict, bool validate = true);

// Sets one key, e.g. from a command-line override.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical text that resolve_config(parse_config(...), true) reproduces.
std::string config_to_text(const RunConfig& cfg);

}  // namespace mipp
