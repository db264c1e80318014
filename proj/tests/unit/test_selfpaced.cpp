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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rrsitr/errors.hpp"
#include "rrsitr/selfpaced.hpp"
#include "temp_dir.hpp"

using namespace rrsitr;

namespace {

const double kPi = std::acos(-1.0);

SimilarityBundle<double> random_bundle(std::mt19937_64& rng, Eigen::Index b, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::MatrixXd g(b, b), l(b, b);
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    g.data()[k] = u(rng);
    l.data()[k] = 0.5 + 0.5 * u(rng) / spread;
  }
  return make_bundle(std::move(g), std::move(l), 0.9);
}

}  // namespace

TEST_SUITE("selfpaced") {

TEST_CASE("partition examples") {
  const std::vector<double> l{2, 10, 20};
  const auto p = partition(l, 5, 18);
  CHECK(p.bucket_of == std::vector<Bucket>{Bucket::kClean, Bucket::kAmbiguous, Bucket::kNoisy});
  CHECK(p.clean == std::vector<std::size_t>{0});
  CHECK(p.ambiguous == std::vector<std::size_t>{1});
  CHECK(p.noisy == std::vector<std::size_t>{2});

  const std::vector<double> edge{5.0, 18.0};
  CHECK(partition(edge, 5, 18).bucket_of ==
        std::vector<Bucket>{Bucket::kAmbiguous, Bucket::kNoisy});

  const std::vector<double> low{0.1, 4.9};
  CHECK(partition(low, 5, 18).noisy.empty());

  CHECK_THROWS_AS(partition(l, 18, 5), ConfigError);
  CHECK_THROWS_AS(partition(l, 5, 5), ConfigError);
  CHECK_THROWS_AS(partition(l, 0, 5), ConfigError);
}

TEST_CASE("single threshold partition has no ambiguous bucket") {
  const std::vector<double> l{2, 10, 20};
  const auto p = single_threshold_partition(l, 5);
  CHECK(p.ambiguous.empty());
  CHECK(p.noisy == std::vector<std::size_t>{1, 2});
}

TEST_CASE("regularizer examples") {
  CHECK(regularizer(0.0, 5.0, 1.0) == doctest::Approx(10.0 / kPi).epsilon(1e-12));
  CHECK(regularizer(0.0, 5.0, 1.0) == doctest::Approx(3.18310).epsilon(1e-5));
  CHECK(regularizer(1.0, 5.0, 1.0) == doctest::Approx(0.0));
  CHECK(regularizer(0.3, 5.0, 5.0) == 0.0);
  CHECK(regularizer(0.3, 5.0, 7.0) == 0.0);
  CHECK_THROWS_AS(regularizer(1.1, 5.0, 1.0), NumericError);
  CHECK_THROWS_AS(regularizer(-0.1, 5.0, 1.0), NumericError);
}

TEST_CASE("closed-form weight examples") {
  CHECK(optimal_weight(0.0, 5.0) == 1.0);
  CHECK(optimal_weight(2.5, 5.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(optimal_weight(2.5, 5.0) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(optimal_weight(5.0, 5.0) == 0.0);
  CHECK(optimal_weight(50.0, 5.0) == 0.0);
  CHECK_THROWS_AS(optimal_weight(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(optimal_weight(1.0, -2.0), ConfigError);
}

TEST_CASE("closed-form weight is strictly decreasing and tends to 0 at gamma") {
  double previous = 2.0;
  for (int k = 0; k < 1000; ++k) {
    const double w = optimal_weight(5.0 * k / 1000.0, 5.0);
    CHECK(w < previous);
    previous = w;
  }
  CHECK(optimal_weight(5.0 - 1e-9, 5.0) < 1e-8);
}

TEST_CASE("library grid oracle") {
  CHECK(std::abs(optimal_weight_oracle(2.5, 5.0, 100000) - std::sqrt(0.5)) <= 2.0 / 100000);
  CHECK(optimal_weight_oracle(0.0, 5.0, 100000) == 1.0);
  CHECK(optimal_weight_oracle(5.0, 5.0, 100000) == 0.0);
  CHECK_THROWS_AS(optimal_weight_oracle(1.0, 5.0, 10), ConfigError);
}

TEST_CASE("closed form agrees with an independent grid minimizer") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ug(0.5, 30.0), uf(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double gamma = ug(rng);
    const double loss = uf(rng) * gamma;
    const double grid = oracle::grid_weight(loss, gamma, 10000);
    CHECK(std::abs(optimal_weight(loss, gamma) - grid) <= 2e-4);
  }
}

TEST_CASE("weighted self-paced loss") {
  const std::vector<double> l{2.5};
  const std::vector<double> w{optimal_weight(2.5, 5.0)};
  const std::vector<std::size_t> bucket{0};
  const double wv = std::sqrt(0.5);
  const double hand = wv * 2.5 - (2.0 / kPi) * 5.0 * (wv * std::acos(wv) - std::sqrt(1 - wv * wv));
  CHECK(weighted_spl_loss(l, w, bucket, 5.0, 1) == doctest::Approx(hand).epsilon(1e-12));

  CHECK(weighted_spl_loss(l, w, {}, 5.0, 1) == 0.0);

  const std::vector<double> l3{1.0, 2.0, 3.0};
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(weighted_spl_loss(l3, zeros, all, 5.0, 4) ==
        doctest::Approx(3.0 * 10.0 / kPi / 4.0).epsilon(1e-12));

  const std::vector<double> short_w{0.5};
  CHECK_THROWS_AS(weighted_spl_loss(l3, short_w, all, 5.0, 3), InternalError);
}

TEST_CASE("per-pair loss decomposes into global and local InfoNCE") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sims = random_bundle(rng, 2 + trial % 15, 1.0);
    const auto loss = per_pair_loss(sims, 0.07, true);
    const auto batch = infonce_batch(sims.global, sims.local, 0.07);
    CHECK(std::abs(loss.total.mean() - batch.total) < 1e-10);
    const auto global_only = per_pair_loss(sims, 0.07, false);
    CHECK(global_only.total == global_only.global);
    CHECK(global_only.local.isZero());
  }
}

TEST_CASE("degenerate objective weights") {
  std::mt19937_64 rng(4);
  const auto sims = random_bundle(rng, 8, 0.2);
  Hyper h;
  h.lambda1 = 0;
  h.lambda2 = 0;
  const auto r = overall_objective(sims, h);
  CHECK(r.value.overall == doctest::Approx(r.value.s1).epsilon(1e-15));
}

TEST_CASE("all-noisy batch reduces to the triplet term") {
  std::mt19937_64 rng(4);
  const auto sims = random_bundle(rng, 8, 0.2);
  Hyper h;
  h.gamma1 = 1e-3;
  h.gamma2 = 2e-3;
  const auto r = overall_objective(sims, h);
  CHECK(r.state.partition.noisy.size() == 8);
  CHECK(r.value.s1 == 0.0);
  CHECK(r.value.s2 == 0.0);
  CHECK(r.value.overall == doctest::Approx(h.lambda2 * r.value.soft).epsilon(1e-15));
  CHECK(r.state.loss_coef.isZero());
}

TEST_CASE("variant substitutions in the frozen state") {
  std::mt19937_64 rng(9);
  const auto sims = random_bundle(rng, 16, 0.4);
  Hyper h;
  h.gamma1 = 9.0;
  h.gamma2 = 9.5;

  const auto full = overall_objective(sims, h, Variant::kFull, 1);
  REQUIRE(!full.state.partition.clean.empty());

  const auto no_spl = overall_objective(sims, h, Variant::kNoSpl, 1);
  for (double w : no_spl.state.weights.w) CHECK(w == 1.0);
  CHECK(no_spl.value.s1 == doctest::Approx(no_spl.loss.total.mean()));

  const auto no_rtl = overall_objective(sims, h, Variant::kNoRtl, 1);
  CHECK(no_rtl.state.lambda2 == 0.0);
  CHECK(no_rtl.value.overall == doctest::Approx(full.value.s1 + h.lambda1 * full.value.s2));

  const auto hard = overall_objective(sims, h, Variant::kSplHardToEasy, 1);
  for (std::size_t i : hard.state.partition.clean) {
    CHECK(hard.state.weights.w[i] == doctest::Approx(1.0 - full.state.weights.w[i]));
  }

  const auto random = overall_objective(sims, h, Variant::kSplRandomWeights, 1);
  for (std::size_t i : random.state.partition.noisy) CHECK(random.state.weights.w[i] == 0.0);
  CHECK(overall_objective(sims, h, Variant::kSplRandomWeights, 1).state.weights.w ==
        random.state.weights.w);

  const auto single = overall_objective(sims, h, Variant::kSplNoAmbiguous, 1);
  CHECK(single.state.partition.ambiguous.empty());
  CHECK(single.state.partition.clean == full.state.partition.clean);

  const auto fixed = overall_objective(sims, h, Variant::kFixedMarginRtl, 1);
  CHECK(fixed.state.rtl.mu_hat.isApproxToConstant(h.sigma));
  CHECK(fixed.state.rtl.hard_txt_idx == full.state.rtl.hard_txt_idx);
  CHECK(fixed.state.weights.w == full.state.weights.w);
  CHECK(fixed.value.soft <= full.value.soft);

  const auto no_local = overall_objective(sims, h, Variant::kNoLocal, 1);
  CHECK(no_local.loss.total == no_local.loss.global);
}

TEST_CASE("noisy-only triplet scope") {
  std::mt19937_64 rng(10);
  const auto sims = random_bundle(rng, 16, 0.4);
  Hyper h;
  h.gamma1 = 9.0;
  h.gamma2 = 9.5;
  h.rtl_scope = RtlScope::kNoisyOnly;
  const auto r = overall_objective(sims, h);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(r.state.rtl.active[i] == (r.state.partition.bucket_of[i] == Bucket::kNoisy ? 1 : 0));
  }
}

TEST_CASE("non-finite objective names the term") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
  auto sims = make_bundle<double>(g, g, 0.9);
  Hyper h;
  auto config = ObjectiveConfig::for_variant(Variant::kFull);
  auto loss = per_pair_loss(sims, h.tau, true);
  auto state = freeze_objective_state(loss, sims.global, h, config, 0);
  Eigen::MatrixXd bad = sims.global;
  bad(0, 1) = std::numeric_limits<double>::infinity();
  try {
    evaluate_objective(loss, bad, state, h, config);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("L_soft") != std::string::npos);
  }
}

TEST_CASE("weight trace CSV") {
  test::TempDir dir;
  const std::vector<PairTrace> rows{{0, 1, 1.5, 0.9, Bucket::kClean},
                                    {3, 0, 20.0, 0.0, Bucket::kNoisy}};
  write_weight_trace_csv(rows, 50, dir / "w.csv");
  std::ifstream in(dir / "w.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "epoch,pair_id,y,loss,weight,bucket");
  CHECK(first == "50,0,1,1.5,0.90000000000000002,clean");
  CHECK(second.rfind("50,3,0,20,0,noisy", 0) == 0);
}

}  // TEST_SUITE
