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

#include "rrsitr/hyper.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "rrsitr/errors.hpp"

namespace rrsitr {
namespace {

void require(bool ok, const char* invariant) {
  if (!ok) throw ConfigError(std::string("hyperparameter invariant violated: ") + invariant);
}

constexpr std::array<std::pair<Variant, std::string_view>, 9> kVariantNames{{
    {Variant::kFull, "full"},
    {Variant::kNoLocal, "no_local"},
    {Variant::kNoSpl, "no_spl"},
    {Variant::kNoRtl, "no_rtl"},
    {Variant::kNoneOfThree, "none_of_three"},
    {Variant::kSplHardToEasy, "spl_hard_to_easy"},
    {Variant::kSplRandomWeights, "spl_random_weights"},
    {Variant::kSplNoAmbiguous, "spl_no_ambiguous"},
    {Variant::kFixedMarginRtl, "fixed_margin_rtl"},
}};

constexpr std::array<std::string_view, 9> kVariantTags{
    "full", "#1", "#2", "#3", "#4", "#5", "#6", "#7", "#8"};

}  // namespace

void Hyper::validate() const {
  require(tau > 0.0 && std::isfinite(tau), "tau > 0");
  require(gamma1 > 0.0, "0 < gamma1");
  require(gamma1 < gamma2 && std::isfinite(gamma2), "gamma1 < gamma2");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma > 0");
  require(lambda1 >= 0.0 && std::isfinite(lambda1), "lambda1 >= 0");
  require(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 >= 0");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha in [0, 1]");
  require(lr > 0.0 && std::isfinite(lr), "lr > 0");
  require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay >= 0");
  require(max_grad_norm > 0.0, "max_grad_norm > 0");
  require(batch_size >= 2, "batch_size >= 2");
  require(init_noise_std >= 0.0, "init_noise_std >= 0");
}

double Hyper::gamma2_at(std::size_t epoch) const {
  if (!(gamma2_final > gamma2) || epochs <= 1) return gamma2;
  const double t = static_cast<double>(epoch > 0 ? epoch - 1 : 0) /
                   static_cast<double>(epochs - 1);
  return gamma2 + (gamma2_final - gamma2) * std::min(1.0, t);
}

RtlScope parse_rtl_scope(std::string_view name) {
  if (name == "full_batch") return RtlScope::kFullBatch;
  if (name == "noisy_only") return RtlScope::kNoisyOnly;
  throw ConfigError("unknown rtl scope '" + std::string(name) +
                    "' (expected full_batch or noisy_only)");
}

std::string_view to_string(RtlScope scope) {
  return scope == RtlScope::kFullBatch ? "full_batch" : "noisy_only";
}

void to_json(nlohmann::json& j, const Hyper& h) {
  j = nlohmann::json{
      {"tau", h.tau},
      {"gamma1", h.gamma1},
      {"gamma2", h.gamma2},
      {"sigma", h.sigma},
      {"lambda1", h.lambda1},
      {"lambda2", h.lambda2},
      {"alpha", h.alpha},
      {"lr", h.lr},
      {"weight_decay", h.weight_decay},
      {"warmup_steps", h.warmup_steps},
      {"max_grad_norm", h.max_grad_norm},
      {"epochs", h.epochs},
      {"batch_size", h.batch_size},
      {"seed", h.seed},
      {"dim_out", h.dim_out},
      {"init_noise_std", h.init_noise_std},
      {"local_aggregation", std::string(to_string(h.local_aggregation))},
      {"rtl_scope", std::string(to_string(h.rtl_scope))},
      {"s1_includes_ambiguous", h.s1_includes_ambiguous},
      {"gamma2_final", h.gamma2_final},
  };
}

void from_json(const nlohmann::json& j, Hyper& h) {
  Hyper d;
  h.tau = j.value("tau", d.tau);
  h.gamma1 = j.value("gamma1", d.gamma1);
  h.gamma2 = j.value("gamma2", d.gamma2);
  h.sigma = j.value("sigma", d.sigma);
  h.lambda1 = j.value("lambda1", d.lambda1);
  h.lambda2 = j.value("lambda2", d.lambda2);
  h.alpha = j.value("alpha", d.alpha);
  h.lr = j.value("lr", d.lr);
  h.weight_decay = j.value("weight_decay", d.weight_decay);
  h.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  h.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
  h.epochs = j.value("epochs", d.epochs);
  h.batch_size = j.value("batch_size", d.batch_size);
  h.seed = j.value("seed", d.seed);
  h.dim_out = j.value("dim_out", d.dim_out);
  h.init_noise_std = j.value("init_noise_std", d.init_noise_std);
  h.local_aggregation = parse_local_aggregation(
      j.value("local_aggregation", std::string(to_string(d.local_aggregation))));
  h.rtl_scope = parse_rtl_scope(j.value("rtl_scope", std::string("full_batch")));
  h.s1_includes_ambiguous = j.value("s1_includes_ambiguous", d.s1_includes_ambiguous);
  h.gamma2_final = j.value("gamma2_final", d.gamma2_final);
}

Variant parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames) {
    if (n == name) return v;
  }
  std::string_view tag = name;
  if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  for (std::size_t i = 1; i < kVariantTags.size(); ++i) {
    if (kVariantTags[i].substr(1) == tag) return kVariantNames[i].first;
  }
  throw ConfigError("unknown ablation variant '" + std::string(name) + "'");
}

std::string_view to_string(Variant v) {
  return kVariantNames[static_cast<std::size_t>(v)].second;
}

std::string_view variant_tag(Variant v) {
  return kVariantTags[static_cast<std::size_t>(v)];
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> kAll{
      Variant::kNoLocal,        Variant::kNoSpl,          Variant::kNoRtl,
      Variant::kNoneOfThree,    Variant::kSplHardToEasy,  Variant::kSplRandomWeights,
      Variant::kSplNoAmbiguous, Variant::kFixedMarginRtl, Variant::kFull};
  return kAll;
}

ObjectiveConfig ObjectiveConfig::for_variant(Variant v) {
  ObjectiveConfig c;
  switch (v) {
    case Variant::kFull:
      break;
    case Variant::kNoLocal:
      c.use_local = false;
      break;
    case Variant::kNoSpl:
      c.weight_rule = WeightRule::kUnit;
      break;
    case Variant::kNoRtl:
      c.use_rtl = false;
      break;
    case Variant::kNoneOfThree:
      c.use_local = false;
      c.weight_rule = WeightRule::kUnit;
      c.use_rtl = false;
      break;
    case Variant::kSplHardToEasy:
      c.weight_rule = WeightRule::kHardToEasy;
      break;
    case Variant::kSplRandomWeights:
      c.weight_rule = WeightRule::kRandom;
      break;
    case Variant::kSplNoAmbiguous:
      c.single_threshold = true;
      break;
    case Variant::kFixedMarginRtl:
      c.margin_mode = MarginMode::kFixed;
      break;
  }
  return c;
}

}  // namespace rrsitr
