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

// Conversion of scalar field rasters (for example surface temperature) into
// binary ground-truth maps.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "mipp/gridmap.hpp"
#include "mipp/text_grid.hpp"

namespace mipp {

struct IngestResult {
  GroundTruthMap map;
  double interesting_fraction = 0.0;
  std::optional<std::string> warning;  // set when one class is empty
};

// Cell is interesting iff value >= threshold.
IngestResult threshold_raster(const TextGrid& raster, double threshold);
IngestResult ingest_raster(std::istream& is, double threshold);
IngestResult ingest_raster_file(const std::string& path, double threshold);

// Smooth synthetic temperature field: a few warm blobs over a gentle
// gradient, roughly spanning 15 to 35 degrees.
TextGrid synthetic_raster(int size, double resolution, std::uint64_t seed);

}  // namespace mipp
