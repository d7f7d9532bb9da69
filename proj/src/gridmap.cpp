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

#include "mipp/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mipp/error.hpp"
#include "mipp/text_grid.hpp"

namespace mipp {
namespace {

// Snaps coordinates that are within rounding noise of a half-cell multiple.
double snap_half(double v) {
  const double twice = std::round(2.0 * v);
  return std::abs(2.0 * v - twice) < 1e-6 ? twice / 2.0 : v;
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

CellRect CellRect::clipped(int width, int height) const {
  CellRect r{std::max(x0, 0), std::max(y0, 0), std::min(x1, width - 1),
             std::min(y1, height - 1)};
  return r;
}

GroundTruthMap::GroundTruthMap(int width, int height, double resolution)
    : width_(width), height_(height), resolution_(resolution) {
  require(width >= 1 && height >= 1, ErrorKind::kConfig, "map dimensions must be >= 1");
  require(resolution > 0.0, ErrorKind::kConfig, "map resolution must be positive");
  cells_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::int64_t GroundTruthMap::interesting_count() const {
  return std::count(cells_.begin(), cells_.end(), std::uint8_t{1});
}

double GroundTruthMap::interesting_fraction() const {
  return cells_.empty() ? 0.0
                        : static_cast<double>(interesting_count()) / cells_.size();
}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, double prior)
    : width_(width), height_(height), resolution_(resolution) {
  require(width >= 1 && height >= 1, ErrorKind::kConfig, "map dimensions must be >= 1");
  require(resolution > 0.0, ErrorKind::kConfig, "map resolution must be positive");
  require(prior >= 0.0 && prior <= 1.0, ErrorKind::kDomain, "prior outside [0, 1]");
  cells_.assign(static_cast<std::size_t>(width) * height, prior);
}

SensorModel::SensorModel(std::vector<std::pair<double, double>> entries)
    : entries_(std::move(entries)) {
  require(!entries_.empty(), ErrorKind::kConfig, "sensor model has no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto [altitude, acc] = entries_[i];
    require(altitude > 0.0, ErrorKind::kConfig, "sensor altitudes must be positive");
    require(acc > 0.5 && acc <= 1.0, ErrorKind::kConfig,
            "sensor accuracy must lie in (0.5, 1]");
    if (i > 0) {
      require(altitude > entries_[i - 1].first, ErrorKind::kConfig,
              "sensor altitudes must be strictly increasing");
    }
  }
}

SensorModel SensorModel::defaults() {
  return SensorModel({{5.0, 0.99}, {10.0, 0.735}, {15.0, 0.625}});
}

bool SensorModel::has_altitude(double altitude) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) {
    return std::abs(e.first - altitude) < 1e-9;
  });
}

double SensorModel::accuracy(double altitude) const {
  for (const auto& [alt, acc] : entries_) {
    if (std::abs(alt - altitude) < 1e-9) return acc;
  }
  std::ostringstream os;
  os << "no sensor model entry for altitude " << altitude << " m";
  fail(ErrorKind::kConfig, os.str());
}

ImportanceWeights ImportanceWeights::from_interesting(double w1) {
  ImportanceWeights w{w1, 1.0 - w1};
  w.validate();
  return w;
}

void ImportanceWeights::validate() const {
  require(interesting >= 0.0 && uninteresting >= 0.0 &&
              std::abs(interesting + uninteresting - 1.0) < 1e-12,
          ErrorKind::kConfig, "importance weights must be >= 0 and sum to 1");
}

CellRect footprint_unclipped(const Vec3& position, double factor, double resolution) {
  require(position.z > 0.0, ErrorKind::kInvalidPosition, "altitude must be positive");
  require(factor > 0.0, ErrorKind::kConfig, "footprint factor must be positive");
  const int n = std::max(1, static_cast<int>(std::lround(factor * position.z / resolution)));
  const double cx = snap_half(position.x / resolution);
  const double cy = snap_half(position.y / resolution);
  CellRect r;
  r.x0 = static_cast<int>(std::floor(cx - n / 2.0));
  r.y0 = static_cast<int>(std::ceil(cy - n / 2.0));
  r.x1 = r.x0 + n - 1;
  r.y1 = r.y0 + n - 1;
  return r;
}

CellRect footprint(const Vec3& position, double factor, int width, int height,
                   double resolution) {
  const double tol = 1e-9 * std::max(width, height) * resolution;
  require(position.x >= -tol && position.y >= -tol &&
              position.x <= width * resolution + tol &&
              position.y <= height * resolution + tol,
          ErrorKind::kInvalidPosition, "position outside terrain bounds");
  CellRect r = footprint_unclipped(position, factor, resolution).clipped(width, height);
  require(!r.empty(), ErrorKind::kInvalidPosition, "footprint does not intersect terrain");
  return r;
}

Measurement simulate_measurement(const GroundTruthMap& gt, const Vec3& position,
                                 const SensorModel& sensor, double footprint_factor,
                                 int pixel_cells, const NoiseKey& noise) {
  require(pixel_cells >= 1, ErrorKind::kConfig, "sensor pixel size must be >= 1 cell");
  const double acc = sensor.accuracy(position.z);
  const CellRect full = footprint_unclipped(position, footprint_factor, gt.resolution());
  const CellRect rect =
      footprint(position, footprint_factor, gt.width(), gt.height(), gt.resolution());

  Measurement m;
  m.position = position;
  m.footprint = rect;
  m.accuracy = acc;
  m.pixel_cells = pixel_cells;
  m.step = static_cast<int>(noise.step);
  m.agent = static_cast<int>(noise.agent);
  m.values.assign(static_cast<std::size_t>(rect.area()), 0);

  const int k = pixel_cells;
  const int px0 = (rect.x0 - full.x0) / k, px1 = (rect.x1 - full.x0) / k;
  const int py0 = (rect.y0 - full.y0) / k, py1 = (rect.y1 - full.y0) / k;
  for (int py = py0; py <= py1; ++py) {
    const int by0 = std::max(full.y0 + py * k, rect.y0);
    const int by1 = std::min(full.y0 + (py + 1) * k - 1, rect.y1);
    for (int px = px0; px <= px1; ++px) {
      const int bx0 = std::max(full.x0 + px * k, rect.x0);
      const int bx1 = std::min(full.x0 + (px + 1) * k - 1, rect.x1);
      int ones = 0, total = 0;
      for (int y = by0; y <= by1; ++y) {
        for (int x = bx0; x <= bx1; ++x) {
          ones += gt.at(x, y);
          ++total;
        }
      }
      const std::uint8_t truth = 2 * ones >= total ? 1 : 0;
      const bool correct = noise.uniform(full.x0 + px * k, full.y0 + py * k) < acc;
      const std::uint8_t observed = correct ? truth : static_cast<std::uint8_t>(1 - truth);
      for (int y = by0; y <= by1; ++y) {
        for (int x = bx0; x <= bx1; ++x) {
          m.values[static_cast<std::size_t>(y - rect.y0) * rect.width() + (x - rect.x0)] =
              observed;
        }
      }
    }
  }
  return m;
}

double cell_posterior(double prior, bool label, double accuracy) {
  const double like1 = label ? accuracy : 1.0 - accuracy;  // p(z | interesting)
  const double like0 = 1.0 - like1;                         // p(z | uninteresting)
  const double num = like1 * prior;
  const double den = num + like0 * (1.0 - prior);
  const double post = den > 0.0 ? num / den : prior;
  return std::clamp(post, OccupancyGrid::kMinProbability, OccupancyGrid::kMaxProbability);
}

void fuse_measurement(OccupancyGrid& grid, const Measurement& m) {
  const CellRect& r = m.footprint;
  require(!r.empty() && r.x0 >= 0 && r.y0 >= 0 && r.x1 < grid.width() &&
              r.y1 < grid.height(),
          ErrorKind::kInvalidMeasurement, "footprint outside map bounds");
  require(m.values.size() == static_cast<std::size_t>(r.area()),
          ErrorKind::kInvalidMeasurement, "measurement values do not match footprint");
  auto cells = grid.cells();
  const auto w = static_cast<std::size_t>(grid.width());
  std::size_t k = 0;
  for (int y = r.y0; y <= r.y1; ++y) {
    double* row = cells.data() + static_cast<std::size_t>(y) * w;
    for (int x = r.x0; x <= r.x1; ++x, ++k) {
      row[x] = cell_posterior(row[x], m.values[k] != 0, m.accuracy);
    }
  }
}

double weighted_cell_entropy(double p, const ImportanceWeights& w) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kDomain, "cell probability outside [0, 1]");
  double wp = 0.5, wq = 0.5;
  if (p > 0.5) {
    wp = w.interesting;
    wq = w.uninteresting;
  } else if (p < 0.5) {
    wp = w.uninteresting;
    wq = w.interesting;
  }
  return -(wp * plogp(p) + wq * plogp(1.0 - p));
}

double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w) {
  double h = 0.0;
  for (double p : grid.cells()) h += weighted_cell_entropy(p, w);
  return h;
}

double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w,
                   std::span<const std::uint8_t> mask) {
  require(mask.size() == grid.cells().size(), ErrorKind::kDimension,
          "entropy mask does not match grid");
  double h = 0.0;
  auto cells = grid.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (mask[i]) h += weighted_cell_entropy(cells[i], w);
  }
  return h;
}

double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w,
                   const CellRect& region) {
  const CellRect r = region.clipped(grid.width(), grid.height());
  require(r == region, ErrorKind::kDimension, "entropy region outside grid");
  double h = 0.0;
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) h += weighted_cell_entropy(grid.at(x, y), w);
  }
  return h;
}

void write_grid_text(std::ostream& os, const OccupancyGrid& grid) {
  TextGrid t{grid.width(), grid.height(), grid.resolution(),
             {grid.cells().begin(), grid.cells().end()}};
  write_text_grid(os, t);
}

OccupancyGrid read_grid_text(std::istream& is) {
  TextGrid t = parse_text_grid(is);
  OccupancyGrid grid(t.width, t.height, t.resolution);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    require(t.values[i] >= 0.0 && t.values[i] <= 1.0, ErrorKind::kData,
            "grid probability outside [0, 1]");
    grid.cells()[i] = t.values[i];
  }
  return grid;
}

void write_ground_truth_text(std::ostream& os, const GroundTruthMap& gt) {
  TextGrid t{gt.width(), gt.height(), gt.resolution(), {}};
  t.values.assign(gt.cells().begin(), gt.cells().end());
  write_text_grid(os, t);
}

GroundTruthMap read_ground_truth_text(std::istream& is) {
  TextGrid t = parse_text_grid(is);
  GroundTruthMap gt(t.width, t.height, t.resolution);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const double v = t.values[static_cast<std::size_t>(y) * t.width + x];
      require(v == 0.0 || v == 1.0, ErrorKind::kData, "ground truth labels must be 0 or 1");
      gt.set(x, y, v == 1.0);
    }
  }
  return gt;
}

void write_pgm(std::ostream& os, const OccupancyGrid& grid) {
  os << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(grid.at(x, y) * 255.0))));
    }
  }
}

}  // namespace mipp
