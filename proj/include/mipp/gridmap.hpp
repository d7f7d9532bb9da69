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

// Probabilistic occupancy mapping of a binary terrain variable.
//
// Cell (x, y) indexes columns west -> east and rows south -> north; storage is
// row-major with y = 0 first. Positions are metric with the origin at the
// south-west terrain corner, so fine cell (x, y) spans
// [x * r, (x + 1) * r) x [y * r, (y + 1) * r).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mipp/random.hpp"

namespace mipp {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

// Inclusive cell rectangle.
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
  std::int64_t area() const {
    return empty() ? 0 : static_cast<std::int64_t>(width()) * height();
  }
  bool contains(int x, int y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  CellRect clipped(int width, int height) const;

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

class GroundTruthMap {
 public:
  GroundTruthMap() = default;
  GroundTruthMap(int width, int height, double resolution);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }

  std::uint8_t at(int x, int y) const { return cells_[index(x, y)]; }
  void set(int x, int y, std::uint8_t label) { cells_[index(x, y)] = label ? 1 : 0; }
  std::span<const std::uint8_t> cells() const { return cells_; }

  std::int64_t interesting_count() const;
  double interesting_fraction() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  std::vector<std::uint8_t> cells_;
};

class OccupancyGrid {
 public:
  static constexpr double kMinProbability = 1e-4;
  static constexpr double kMaxProbability = 1.0 - 1e-4;

  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, double prior = 0.5);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }

  double at(int x, int y) const { return cells_[index(x, y)]; }
  void set(int x, int y, double p) { cells_[index(x, y)] = p; }
  std::span<const double> cells() const { return cells_; }
  std::span<double> cells() { return cells_; }

  bool same_shape(const GroundTruthMap& gt) const {
    return gt.width() == width_ && gt.height() == height_;
  }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  std::vector<double> cells_;
};

// Per-altitude probability that a sensor pixel reports the true label.
class SensorModel {
 public:
  SensorModel() = default;
  explicit SensorModel(std::vector<std::pair<double, double>> entries);

  static SensorModel defaults();

  // Throws a configuration error for altitudes without an entry.
  double accuracy(double altitude) const;
  bool has_altitude(double altitude) const;
  const std::vector<std::pair<double, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<double, double>> entries_;
};

struct ImportanceWeights {
  double interesting = 0.8;    // w1, applied while p > 0.5
  double uninteresting = 0.2;  // w2, applied while p < 0.5

  static ImportanceWeights from_interesting(double w1);
  void validate() const;
};

struct Measurement {
  Vec3 position;
  CellRect footprint;
  std::vector<std::uint8_t> values;  // row-major over footprint
  double accuracy = 0.5;
  int pixel_cells = 1;  // side of one sensor pixel in map cells
  int agent = 0;
  int step = 0;

  std::uint8_t label(int x, int y) const {
    return values[static_cast<std::size_t>(y - footprint.y0) * footprint.width() +
                  (x - footprint.x0)];
  }
};

// Unclipped square footprint of side round(factor * altitude / resolution)
// cells centred on the position; odd remainders go to the north/west side.
CellRect footprint_unclipped(const Vec3& position, double factor, double resolution);

CellRect footprint(const Vec3& position, double factor, int width, int height,
                   double resolution);

// Sensor pixels are pixel_cells x pixel_cells blocks of map cells anchored at
// the unclipped footprint origin. Each pixel reports the majority true label
// (ties count as interesting), flipped with probability 1 - accuracy.
Measurement simulate_measurement(const GroundTruthMap& gt, const Vec3& position,
                                 const SensorModel& sensor, double footprint_factor,
                                 int pixel_cells, const NoiseKey& noise);

// Posterior of one cell after observing `label` with the given accuracy,
// clamped to [kMinProbability, kMaxProbability].
double cell_posterior(double prior, bool label, double accuracy);

void fuse_measurement(OccupancyGrid& grid, const Measurement& m);

double weighted_cell_entropy(double p, const ImportanceWeights& w);

double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w);
double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w,
                   std::span<const std::uint8_t> mask);
double map_entropy(const OccupancyGrid& grid, const ImportanceWeights& w,
                   const CellRect& region);

// Text grid: header "W H r", then H lines of W values, northern row first.
void write_grid_text(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_grid_text(std::istream& is);
void write_ground_truth_text(std::ostream& os, const GroundTruthMap& gt);
GroundTruthMap read_ground_truth_text(std::istream& is);

// 8-bit binary PGM, probability * 255 rounded, northern row first.
void write_pgm(std::ostream& os, const OccupancyGrid& grid);

}  // namespace mipp
