// Copyright 2026 The rrsitr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rrsitr/similarity.hpp"

namespace rrsitr {

LocalAggregation parse_local_aggregation(std::string_view name) {
  if (name == "frobenius") return LocalAggregation::kNormalizedFrobenius;
  if (name == "mean") return LocalAggregation::kMeanCosine;
  throw ConfigError("unknown local aggregation '" + std::string(name) +
                    "' (expected frobenius|mean)");
}

std::string_view to_string(LocalAggregation agg) {
  switch (agg) {
    case LocalAggregation::kNormalizedFrobenius:
      return "frobenius";
    case LocalAggregation::kMeanCosine:
      return "mean";
  }
  return "frobenius";
}

}  // namespace rrsitr
