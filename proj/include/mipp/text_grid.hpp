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

// Plain-text grid format shared by belief maps, ground-truth maps and rasters.
//
//   line 1:   W H r
//   lines 2+: H rows of W whitespace-separated values, northern row first
//
// Values are returned row-major with the southern row (y = 0) first.

#pragma once

#include <iosfwd>
#include <vector>

namespace mipp {

struct TextGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.0;
  std::vector<double> values;
};

// Throws a parse error naming the offending line, or a data error for
// non-finite values.
TextGrid parse_text_grid(std::istream& is);

void write_text_grid(std::ostream& os, const TextGrid& grid, int precision = 17);

}  // namespace mipp
