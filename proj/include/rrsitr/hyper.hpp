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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rrsitr/losses.hpp"
#include "rrsitr/similarity.hpp"

namespace rrsitr {

enum class RtlScope { kFullBatch, kNoisyOnly };

// "full_batch" / "noisy_only".
RtlScope parse_rtl_scope(std::string_view name);
std::string_view to_string(RtlScope scope);

// Every scalar knob of the objective, optimizer and schedule.
struct Hyper {
  double tau = 0.07;
  double gamma1 = 5.0;
  double gamma2 = 18.0;
  double sigma = 0.6;
  double lambda1 = 0.8;
  double lambda2 = 0.9;
  double alpha = 0.9;

  double lr = 1e-3;  // desk-scale default; 7e-6 is the CLIP fine-tuning value
  double weight_decay = 0.7;
  std::size_t warmup_steps = 200;
  double max_grad_norm = 50.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;

  std::size_t dim_out = 0;  // 0: same as the input width
  double init_noise_std = 0.01;

  LocalAggregation local_aggregation = LocalAggregation::kNormalizedFrobenius;
  RtlScope rtl_scope = RtlScope::kFullBatch;
  // Alternative reading: ambiguous pairs also enter L_S1.
  bool s1_includes_ambiguous = false;
  // Linear pace schedule: gamma2 grows to this value by the last epoch.
  // Values <= gamma2 disable it.
  double gamma2_final = 0.0;

  void validate() const;

  // gamma2 in effect during `epoch` (1-based) of `epochs`.
  double gamma2_at(std::size_t epoch) const;
};

void to_json(nlohmann::json& j, const Hyper& h);
void from_json(const nlohmann::json& j, Hyper& h);

// Objective substitutions of the ablation grid.
enum class Variant {
  kFull,
  kNoLocal,           // #1
  kNoSpl,             // #2
  kNoRtl,             // #3
  kNoneOfThree,       // #4
  kSplHardToEasy,     // #5
  kSplRandomWeights,  // #6
  kSplNoAmbiguous,    // #7
  kFixedMarginRtl,    // #8
};

// Accepts "full", the snake_case names, "#N" and "N".
Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v);
// "#1".."#8" or "full".
std::string_view variant_tag(Variant v);
const std::vector<Variant>& all_variants();

enum class WeightRule {
  kClosedForm,  // cos(pi/2 * l / gamma)
  kUnit,        // w = 1 for every pair, no regularizer, no buckets
  kHardToEasy,  // 1 - cos(pi/2 * l / gamma)
  kRandom,      // Uniform[0, 1]
};

// What a variant turns on and off.
struct ObjectiveConfig {
  bool use_local = true;
  WeightRule weight_rule = WeightRule::kClosedForm;
  bool single_threshold = false;
  bool use_rtl = true;
  MarginMode margin_mode = MarginMode::kAdaptive;

  static ObjectiveConfig for_variant(Variant v);
};

}  // namespace rrsitr
