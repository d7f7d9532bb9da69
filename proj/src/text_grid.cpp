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

#include "mipp/text_grid.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mipp/error.hpp"

namespace mipp {
namespace {

bool next_content_line(std::istream& is, std::string& line, int& line_no) {
  while (std::getline(is, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

std::string at_line(int line_no) { return "line " + std::to_string(line_no) + ": "; }

}  // namespace

TextGrid parse_text_grid(std::istream& is) {
  TextGrid grid;
  std::string line;
  int line_no = 0;
  if (!next_content_line(is, line, line_no)) fail(ErrorKind::kParse, "line 1: missing header");
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> grid.width >> grid.height >> grid.resolution) || (header >> extra)) {
      fail(ErrorKind::kParse, at_line(line_no) + "header must be 'W H resolution'");
    }
    if (grid.width < 1 || grid.height < 1) {
      fail(ErrorKind::kParse, at_line(line_no) + "grid dimensions must be >= 1");
    }
    if (!(grid.resolution > 0.0) || !std::isfinite(grid.resolution)) {
      fail(ErrorKind::kParse, at_line(line_no) + "resolution must be positive");
    }
  }
  const auto w = static_cast<std::size_t>(grid.width);
  grid.values.assign(w * grid.height, 0.0);
  for (int row = 0; row < grid.height; ++row) {
    if (!next_content_line(is, line, line_no)) {
      fail(ErrorKind::kParse, at_line(line_no + 1) + "expected " +
                                  std::to_string(grid.height) + " rows, found " +
                                  std::to_string(row));
    }
    const int y = grid.height - 1 - row;
    const char* p = line.c_str();
    std::size_t count = 0;
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p) fail(ErrorKind::kParse, at_line(line_no) + "non-numeric value");
      if (!std::isfinite(v)) fail(ErrorKind::kData, at_line(line_no) + "non-finite value");
      if (count < w) grid.values[static_cast<std::size_t>(y) * w + count] = v;
      ++count;
      p = end;
    }
    if (count != w) {
      fail(ErrorKind::kParse, at_line(line_no) + "expected " + std::to_string(w) +
                                  " values, found " + std::to_string(count));
    }
  }
  if (next_content_line(is, line, line_no)) {
    fail(ErrorKind::kParse, at_line(line_no) + "trailing data after " +
                                std::to_string(grid.height) + " rows");
  }
  return grid;
}

void write_text_grid(std::ostream& os, const TextGrid& grid, int precision) {
  os << grid.width << ' ' << grid.height << ' ' << std::setprecision(17) << grid.resolution
     << '\n';
  os << std::setprecision(precision);
  const auto w = static_cast<std::size_t>(grid.width);
  for (int y = grid.height - 1; y >= 0; --y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x) os << ' ';
      os << grid.values[static_cast<std::size_t>(y) * w + x];
    }
    os << '\n';
  }
}

}  // namespace mipp
