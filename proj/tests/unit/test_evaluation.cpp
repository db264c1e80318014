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

#include <random>
#include <vector>

#include "oracles.hpp"
#include "rrsitr/errors.hpp"
#include "rrsitr/evaluation.hpp"

using namespace rrsitr;

namespace {

std::vector<Eigen::Index> diagonal(Eigen::Index n) {
  std::vector<Eigen::Index> gt(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) gt[static_cast<std::size_t>(i)] = i;
  return gt;
}

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.n_pairs = 50;
  c.n_classes = 5;
  c.dim = 8;
  c.d1 = 2;
  c.d2 = 2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("hand-ranked 3x3 example") {
  Eigen::MatrixXd s(3, 3);
  s << .9, .8, .1, .2, .3, .9, .5, .4, .6;
  CHECK(recall_at_k(s, diagonal(3), 1) == doctest::Approx(66.67).epsilon(1e-4));
  CHECK(recall_at_k(s, diagonal(3), 2) == 100.0);
}

TEST_CASE("dominant diagonal and full coverage") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd s(7, 7);
  for (Eigen::Index k = 0; k < s.size(); ++k) s.data()[k] = u(rng);
  CHECK(recall_at_k(s, diagonal(7), 7) == 100.0);
  s.diagonal().array() += 2.0;
  CHECK(recall_at_k(s, diagonal(7), 1) == 100.0);
}

TEST_CASE("ties rank the lower index first") {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, 0.5);
  const std::vector<Eigen::Index> gt{0, 1, 2};
  CHECK(recall_at_k(s, gt, 1) == doctest::Approx(100.0 / 3));
  CHECK(recall_at_k(s, gt, 2) == doctest::Approx(200.0 / 3));
}

TEST_CASE("argument checks") {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(recall_at_k(s, diagonal(3), 4), ConfigError);
  CHECK_THROWS_AS(recall_at_k(s, diagonal(3), 0), ConfigError);
  CHECK_THROWS_AS(recall_at_k(s, diagonal(2), 1), ConfigError);
  CHECK_THROWS_AS(retrieval_report(Eigen::MatrixXd::Identity(3, 4)), ConfigError);
}

TEST_CASE("full-sort oracle and monotonicity in k") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd s(20, 20);
    // Coarse values force plenty of ties.
    for (Eigen::Index k = 0; k < s.size(); ++k) s.data()[k] = coarse(rng) / 4.0;
    std::vector<Eigen::Index> gt(20);
    for (auto& g : gt) g = static_cast<Eigen::Index>(rng() % 20);
    double previous = -1;
    for (std::size_t k = 1; k <= 20; ++k) {
      const double r = recall_at_k(s, gt, k);
      CHECK(r == oracle::recall_full_sort(s, gt, k));
      CHECK(r >= previous);
      previous = r;
    }
  }
}

TEST_CASE("mR is the mean of the six recalls") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd s(30, 30);
  for (Eigen::Index k = 0; k < s.size(); ++k) s.data()[k] = n01(rng);
  const auto r = retrieval_report(s);
  const double mean = (r.i2t_r1 + r.i2t_r5 + r.i2t_r10 + r.t2i_r1 + r.t2i_r5 + r.t2i_r10) / 6;
  CHECK(std::abs(r.mr - mean) <= 1e-12);
  CHECK(r.i2t_r1 <= r.i2t_r5);
  CHECK(r.t2i_r5 <= r.t2i_r10);
  CHECK(r.t2i_r1 == recall_at_k(Eigen::MatrixXd(s.transpose()), diagonal(30), 1));
}

TEST_CASE("evaluate refuses noisy test splits") {
  const Dataset clean = generate_synthetic(small_config(1));
  const Dataset noisy = inject_noise(clean, {0.2, 1});
  const auto heads = ProjectionHeads::init(8, 8, 0.0, 0);
  CHECK_THROWS_AS(evaluate(heads, noisy, Hyper{}), DataError);
  CHECK_NOTHROW(evaluate(heads, clean, Hyper{}));
}

TEST_CASE("separated test set reaches mR 100") {
  // Pair i lives on axis i in both modalities.
  Dataset d;
  d.dim = 12;
  d.d1 = 1;
  d.d2 = 1;
  d.image_global = EmbeddingBlock::Identity(12, 12);
  d.image_local = d.image_global;
  d.text_global = d.image_global;
  d.text_local = d.image_global;
  d.y.assign(12, 1);
  const auto report = evaluate(ProjectionHeads::init(12, 12, 0.0, 0), d, Hyper{});
  CHECK(report.mr == 100.0);
}

TEST_CASE("random heads on random data are near chance") {
  double r1 = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    SyntheticConfig c = small_config(100 + static_cast<std::uint64_t>(t));
    c.n_pairs = 20;
    c.intra_class_spread = 50.0;  // pairing information drowned out
    const Dataset d = generate_synthetic(c);
    const auto heads = ProjectionHeads::init(8, 8, 1.0, static_cast<std::uint64_t>(t));
    r1 += evaluate(heads, d, Hyper{}).i2t_r1;
  }
  r1 /= trials;
  CHECK(r1 == doctest::Approx(100.0 / 20).epsilon(0.5));
}

TEST_CASE("fusion weight changes the report") {
  const Dataset d = generate_synthetic(small_config(5));
  const auto heads = ProjectionHeads::init(8, 8, 0.0, 0);
  Hyper global_only;
  global_only.alpha = 1.0;
  Hyper local_only;
  local_only.alpha = 0.0;
  const auto a = evaluate(heads, d, global_only);
  const auto b = evaluate(heads, d, local_only);
  CHECK(a.mr != b.mr);
  CHECK(evaluate(heads, d, local_only, false).mr == a.mr);
}

TEST_CASE("detection metrics") {
  using B = Bucket;
  const std::vector<std::uint8_t> y{1, 1, 0, 0};
  const std::vector<B> perfect{B::kClean, B::kAmbiguous, B::kNoisy, B::kNoisy};
  const auto p = detection_metrics(perfect, y);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.f1 == 1.0);
  CHECK(p.purity_clean == 1.0);
  CHECK(p.purity_noisy == 1.0);

  const std::vector<B> none{B::kClean, B::kClean, B::kAmbiguous, B::kClean};
  const auto e = detection_metrics(none, y);
  CHECK(e.precision == 1.0);
  CHECK(e.recall == 0.0);
  CHECK(e.predicted_noisy == 0);
  CHECK(e.purity_clean == doctest::Approx(2.0 / 3));

  const std::vector<std::uint8_t> all_clean{1, 1, 1, 1};
  const auto c = detection_metrics(perfect, all_clean);
  CHECK_FALSE(c.has_ground_truth_noise);
  nlohmann::json j = c;
  CHECK(j["note"] == "no ground-truth noise");

  const std::vector<double> w{1.0, 0.5, 0.0, 0.1};
  const auto weighted = detection_metrics(perfect, y, w);
  CHECK(weighted.mean_weight_y1 == doctest::Approx(0.75));
  CHECK(weighted.mean_weight_y0 == doctest::Approx(0.05));

  const std::vector<std::uint8_t> short_y{1};
  CHECK_THROWS_AS(detection_metrics(perfect, short_y), InternalError);
}

TEST_CASE("CSV row") {
  RetrievalReport r;
  r.i2t_r1 = 50;
  r.mr = 12.5;
  CHECK(retrieval_csv_header() == "label,i2t_r1,i2t_r5,i2t_r10,t2i_r1,t2i_r5,t2i_r10,mr");
  CHECK(retrieval_csv_row("full", r) == "full,50,0,0,0,0,0,12.5");
}

}  // TEST_SUITE
