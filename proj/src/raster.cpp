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

#include "mipp/raster.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "mipp/error.hpp"
#include "mipp/random.hpp"

namespace mipp {

IngestResult threshold_raster(const TextGrid& raster, double threshold) {
  require(raster.width > 0 && raster.height > 0 && raster.resolution > 0.0, ErrorKind::kData,
          "raster must have positive size and resolution");
  IngestResult out{GroundTruthMap(raster.width, raster.height, raster.resolution), 0.0, {}};
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const double v = raster.values[static_cast<std::size_t>(y) * raster.width + x];
      require(std::isfinite(v), ErrorKind::kData, "raster contains a non-finite value");
      out.map.set(x, y, v >= threshold ? 1 : 0);
    }
  }
  out.interesting_fraction = out.map.interesting_fraction();
  if (out.map.interesting_count() == 0) {
    out.warning = "degenerate terrain: no cell reaches the threshold";
  } else if (out.map.interesting_count() ==
             static_cast<std::int64_t>(raster.width) * raster.height) {
    out.warning = "degenerate terrain: every cell reaches the threshold";
  }
  return out;
}

IngestResult ingest_raster(std::istream& is, double threshold) {
  return threshold_raster(parse_text_grid(is), threshold);
}

IngestResult ingest_raster_file(const std::string& path, double threshold) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kData, "cannot open raster '" + path + "'");
  return ingest_raster(in, threshold);
}

TextGrid synthetic_raster(int size, double resolution, std::uint64_t seed) {
  require(size > 0 && resolution > 0.0, ErrorKind::kUsage, "raster size must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Blob {
    double x, y, sigma, amplitude;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 5; ++i) {
    blobs.push_back({unit(rng), unit(rng), 0.08 + 0.12 * unit(rng), 6.0 + 6.0 * unit(rng)});
  }
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  TextGrid g{size, size, resolution, std::vector<double>(static_cast<std::size_t>(size) * size)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size;
      const double v = (y + 0.5) / size;
      double t = 20.0 + 4.0 * ((u - 0.5) * std::cos(angle) + (v - 0.5) * std::sin(angle));
      for (const Blob& b : blobs) {
        const double d2 = (u - b.x) * (u - b.x) + (v - b.y) * (v - b.y);
        t += b.amplitude * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
      }
      g.values[static_cast<std::size_t>(y) * size + x] = t;
    }
  }
  return g;
}

}  // namespace mipp
