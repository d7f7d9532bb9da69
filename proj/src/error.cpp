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

#include "mipp/error.hpp"

namespace mipp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kInvalidPosition: return "invalid position";
    case ErrorKind::kInvalidMeasurement: return "invalid measurement";
    case ErrorKind::kStepRejected: return "rejected step";
    case ErrorKind::kContract: return "contract violation";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kDivergence: return "training divergence";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kDegenerate: return "degenerate terrain";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace mipp
