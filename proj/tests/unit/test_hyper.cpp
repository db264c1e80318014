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


#include <doctest.h>

#include "rrsitr/errors.hpp"
#include "rrsitr/hyper.hpp"

using namespace rrsitr;

TEST_SUITE("hyper") {

TEST_CASE("defaults") {
  const Hyper h;
  CHECK(h.gamma1 == 5.0);
  CHECK(h.gamma2 == 18.0);
  CHECK(h.sigma == 0.6);
  CHECK(h.lambda1 == 0.8);
  CHECK(h.lambda2 == 0.9);
  CHECK(h.alpha == 0.9);
  CHECK(h.batch_size == 100);
  CHECK(h.epochs == 50);
  CHECK(h.warmup_steps == 200);
  CHECK(h.max_grad_norm == 50.0);
  CHECK_NOTHROW(h.validate());
}

TEST_CASE("validation") {
  Hyper h;
  h.tau = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyper{};
  h.gamma2 = 4;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyper{};
  h.sigma = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyper{};
  h.batch_size = 1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyper{};
  h.alpha = 1.1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
}

TEST_CASE("JSON round trip") {
  Hyper h;
  h.lr = 7e-6;
  h.rtl_scope = RtlScope::kNoisyOnly;
  h.local_aggregation = LocalAggregation::kMeanCosine;
  h.seed = 99;
  const nlohmann::json j = h;
  const Hyper back = j.get<Hyper>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.seed == 99);
}

TEST_CASE("pace schedule") {
  Hyper h;
  CHECK(h.gamma2_at(1) == 18.0);
  CHECK(h.gamma2_at(50) == 18.0);
  h.gamma2_final = 28.0;
  CHECK(h.gamma2_at(1) == doctest::Approx(18.0));
  CHECK(h.gamma2_at(50) == doctest::Approx(28.0));
}

TEST_CASE("variant names") {
  CHECK(parse_variant("full") == Variant::kFull);
  CHECK(parse_variant("#5") == Variant::kSplHardToEasy);
  CHECK(parse_variant("7") == Variant::kSplNoAmbiguous);
  CHECK(parse_variant("fixed_margin_rtl") == Variant::kFixedMarginRtl);
  CHECK_THROWS_AS(parse_variant("#9"), ConfigError);
  CHECK_THROWS_AS(parse_variant("bogus"), ConfigError);
  CHECK(all_variants().size() == 9);
  for (Variant v : all_variants()) {
    CHECK(parse_variant(to_string(v)) == v);
    CHECK(parse_variant(variant_tag(v)) == v);
  }
}

TEST_CASE("variant objective switches") {
  CHECK_FALSE(ObjectiveConfig::for_variant(Variant::kNoLocal).use_local);
  CHECK(ObjectiveConfig::for_variant(Variant::kNoSpl).weight_rule == WeightRule::kUnit);
  CHECK_FALSE(ObjectiveConfig::for_variant(Variant::kNoRtl).use_rtl);
  const auto none = ObjectiveConfig::for_variant(Variant::kNoneOfThree);
  CHECK_FALSE(none.use_local);
  CHECK_FALSE(none.use_rtl);
  CHECK(none.weight_rule == WeightRule::kUnit);
  CHECK(ObjectiveConfig::for_variant(Variant::kSplNoAmbiguous).single_threshold);
  CHECK(ObjectiveConfig::for_variant(Variant::kFixedMarginRtl).margin_mode == MarginMode::kFixed);
}

}  // TEST_SUITE
