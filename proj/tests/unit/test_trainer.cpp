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
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "fd_check.hpp"
#include "rrsitr/errors.hpp"
#include "rrsitr/trainer.hpp"
#include "temp_dir.hpp"

using namespace rrsitr;

namespace {

Dataset noisy_dataset(std::size_t n, std::size_t dim, std::uint64_t seed, double rho = 0.4) {
  SyntheticConfig c;
  c.n_pairs = n;
  c.n_classes = 10;
  c.dim = dim;
  c.d1 = 3;
  c.d2 = 4;
  c.seed = seed;
  return inject_noise(generate_synthetic(c), {rho, seed + 1});
}

PairBatch first_batch(const Dataset& d, std::size_t b) {
  std::vector<std::size_t> rows(b);
  for (std::size_t i = 0; i < b; ++i) rows[i] = i;
  return gather_batch(d, rows);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("identity head on unit input is the identity") {
  const Dataset d = noisy_dataset(6, 8, 1, 0.0);
  const PairBatch batch = first_batch(d, 6);
  const auto p = forward(ProjectionHeads::init(8, 8, 0.0, 0), batch);
  CHECK((p.image.global() - batch.image_global).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((p.text.local() - batch.text_local).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("head shapes and flatten round trip") {
  auto heads = ProjectionHeads::init(8, 5, 0.01, 3);
  CHECK(heads.w_img.rows() == 5);
  CHECK(heads.w_img.cols() == 8);
  CHECK(heads.num_params() == 2 * (5 * 8 + 5));
  const Eigen::VectorXd flat = heads.flatten();
  auto copy = ProjectionHeads::zeros_like(heads);
  copy.unflatten(flat);
  CHECK(copy == heads);
  CHECK(heads.weight_mask().sum() == 80);
  CHECK_THROWS_AS(forward(heads, first_batch(noisy_dataset(4, 6, 1, 0.0), 4)), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  test::TempDir dir;
  const auto heads = ProjectionHeads::init(8, 6, 0.1, 4);
  write_checkpoint(heads, dir / "h.rrsp");
  CHECK(read_checkpoint(dir / "h.rrsp") == heads);
  std::ofstream(dir / "bad.rrsp", std::ios::binary) << "RRSX";
  CHECK_THROWS_AS(read_checkpoint(dir / "bad.rrsp"), FormatError);
}

TEST_CASE("analytic gradient matches finite differences") {
  const Dataset d = noisy_dataset(24, 8, 2);
  const PairBatch batch = first_batch(d, 24);
  const auto heads = ProjectionHeads::init(8, 8, 0.05, 1);
  const Hyper h = test::with_three_buckets(heads, batch, Hyper{});
  for (Variant v : all_variants()) {
    const auto g = gradients(heads, batch, h, v, 5);
    if (v == Variant::kFull) {
      CHECK(!g.state.partition.clean.empty());
      CHECK(!g.state.partition.ambiguous.empty());
      CHECK(!g.state.partition.noisy.empty());
    }
    const auto fd = test::finite_difference_check(heads, batch, h, v, g.state, 60, 9);
    INFO("variant ", to_string(v));
    CHECK(fd.max_rel_error < 1e-6);
  }
}

TEST_CASE("gradient check with the alternative options") {
  const Dataset d = noisy_dataset(16, 6, 3);
  const PairBatch batch = first_batch(d, 16);
  const auto heads = ProjectionHeads::init(6, 6, 0.05, 2);
  Hyper h = test::with_three_buckets(heads, batch, Hyper{});
  h.local_aggregation = LocalAggregation::kMeanCosine;
  h.rtl_scope = RtlScope::kNoisyOnly;
  h.s1_includes_ambiguous = true;
  const auto g = gradients(heads, batch, h);
  CHECK(test::finite_difference_check(heads, batch, h, Variant::kFull, g.state, 60, 1)
            .max_rel_error < 1e-6);
}

TEST_CASE("with lambdas zero and unit weights the gradient is the InfoNCE gradient") {
  const Dataset d = noisy_dataset(8, 6, 4, 0.0);
  const PairBatch batch = first_batch(d, 8);
  const auto heads = ProjectionHeads::init(6, 6, 0.05, 3);
  Hyper h;
  h.lambda1 = 0;
  h.lambda2 = 0;
  h.gamma1 = 1e6;
  h.gamma2 = 2e6;
  auto g = gradients(heads, batch, h);
  CHECK(g.state.partition.clean.size() == 8);
  // Freeze every weight at 1: the objective is the batch-mean InfoNCE.
  auto state = g.state;
  std::fill(state.weights.w.begin(), state.weights.w.end(), 1.0);
  state.loss_coef.setConstant(1.0 / 8);
  const auto frozen = gradients_frozen(heads, batch, h, Variant::kFull, state);
  const auto unit = gradients(heads, batch, h, Variant::kNoSpl);
  CHECK((frozen.grad.flatten() - unit.grad.flatten()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("an all-noisy batch without the triplet term has zero gradient") {
  const Dataset d = noisy_dataset(8, 6, 5);
  const PairBatch batch = first_batch(d, 8);
  const auto heads = ProjectionHeads::init(6, 6, 0.05, 3);
  Hyper h;
  h.gamma1 = 1e-4;
  h.gamma2 = 2e-4;
  h.lambda2 = 0;
  const auto g = gradients(heads, batch, h);
  CHECK(g.state.partition.noisy.size() == 8);
  CHECK(g.grad.flatten().isZero(0.0));
}

TEST_CASE("learning-rate schedule") {
  Hyper h;
  h.lr = 7e-6;
  h.warmup_steps = 200;
  CHECK(lr_at(0, 1000, h) == 0.0);
  CHECK(lr_at(100, 1000, h) == doctest::Approx(3.5e-6));
  CHECK(lr_at(200, 1000, h) == doctest::Approx(7e-6));
  CHECK(lr_at(600, 1000, h) == doctest::Approx(3.5e-6));
  CHECK(lr_at(999, 1000, h) < 1e-10);
  CHECK(lr_at(1000, 1000, h) == 0.0);
}

TEST_CASE("gradient clipping") {
  Eigen::VectorXd g(3);
  g << 30, 40, 0;
  CHECK(clip_grad_norm(g, 10.0) == doctest::Approx(50.0));
  CHECK(g.norm() <= 10.0 + 1e-9);
  Eigen::VectorXd small(2);
  small << 1, 1;
  clip_grad_norm(small, 10.0);
  CHECK(small == Eigen::Vector2d(1, 1));
}

TEST_CASE("AdamW decays weights but not biases") {
  Eigen::VectorXd params(2);
  params << 1.0, 1.0;
  Eigen::VectorXd mask(2);
  mask << 1.0, 0.0;
  AdamW opt(2, mask);
  opt.step(params, Eigen::VectorXd::Zero(2), 0.1, 0.5);
  CHECK(params[0] == doctest::Approx(0.95));
  CHECK(params[1] == 1.0);
  // First Adam step moves by lr in the gradient's sign direction.
  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(2);
  AdamW opt2(2, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd grad(2);
  grad << 3.0, -0.01;
  opt2.step(p2, grad, 0.1, 0.0);
  CHECK(p2[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p2[1] == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("zero epochs returns the initial heads") {
  const Dataset d = noisy_dataset(40, 6, 6);
  Hyper h;
  h.epochs = 0;
  h.seed = 3;
  const auto r = train(d, h);
  CHECK(r.heads == r.final_heads);
  CHECK(r.log.epochs.empty());
  h.epochs = 1;
  h.batch_size = 20;
  CHECK_FALSE(train(d, h).final_heads == r.heads);
}

TEST_CASE("identical runs give identical logs and checkpoints") {
  test::TempDir dir;
  const Dataset d = noisy_dataset(120, 8, 7);
  const Dataset val = noisy_dataset(30, 8, 8, 0.0);
  Hyper h;
  h.epochs = 3;
  h.batch_size = 40;
  h.seed = 11;
  TrainOptions o;
  o.validation = &val;
  o.trace_epochs = {1};
  const auto a = train(d, h, o);
  const auto b = train(d, h, o);
  CHECK(a.heads == b.heads);
  CHECK(a.final_heads == b.final_heads);
  write_train_log(a.log, dir / "a.jsonl");
  write_train_log(b.log, dir / "b.jsonl");
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  write_checkpoint(a.heads, dir / "a.rrsp");
  write_checkpoint(b.heads, dir / "b.rrsp");
  CHECK(slurp(dir / "a.rrsp") == slurp(dir / "b.rrsp"));
  CHECK(a.log.traces.size() == 2);
  CHECK(a.log.traces.at(1).size() == 120);
  CHECK(a.log.best_epoch >= 1);
  CHECK(a.log.epochs.front().val_mr.has_value());

  h.seed = 12;
  CHECK_FALSE(train(d, h, o).final_heads == a.final_heads);
}

TEST_CASE("train log records") {
  const Dataset d = noisy_dataset(60, 6, 9);
  Hyper h;
  h.epochs = 2;
  h.batch_size = 30;
  const auto r = train(d, h);
  REQUIRE(r.log.epochs.size() == 2);
  const auto& e = r.log.epochs[1];
  CHECK(e.steps == 2);
  CHECK(e.n_clean + e.n_ambiguous + e.n_noisy == 60);
  std::size_t hist = 0;
  for (auto c : e.weight_hist) hist += c;
  CHECK(hist == 60);
  const auto j = to_json(e);
  CHECK(j.at("L_overall") == e.overall);
  CHECK_FALSE(j.contains("wall_seconds"));
  CHECK(to_json(e, true).contains("wall_seconds"));
}

TEST_CASE("ablation substitutions during training") {
  const Dataset d = noisy_dataset(60, 6, 10);
  Hyper h;
  h.epochs = 2;
  h.batch_size = 30;
  h.seed = 2;
  TrainOptions o;
  o.trace_epochs = {1, 2};
  const auto no_spl = ablate(d, h, Variant::kNoSpl, o);
  for (const auto& [epoch, rows] : no_spl.log.traces) {
    for (const auto& row : rows) CHECK(row.weight == 1.0);
  }
  const auto full = ablate(d, h, Variant::kFull, o);
  const auto fixed = ablate(d, h, Variant::kFixedMarginRtl, o);
  // Same seeds: the fixed margin only changes the reported triplet value.
  CHECK(fixed.log.traces.at(1).front().weight == full.log.traces.at(1).front().weight);
  CHECK(fixed.log.epochs[0].soft <= full.log.epochs[0].soft);
  const auto direct = train(d, h, o);
  CHECK(direct.final_heads == full.final_heads);
}

TEST_CASE("desk-scale run descends") {
  SyntheticConfig c;
  c.n_pairs = 1000;
  c.seed = 21;
  const Dataset d = inject_noise(generate_synthetic(c), {0.4, 22});
  Hyper h;
  h.seed = 21;
  const auto r = train(d, h);
  REQUIRE(r.log.epochs.size() == 50);
  CHECK(r.log.epochs.back().overall < r.log.initial_overall);
}

TEST_CASE("noisy validation splits are rejected") {
  const Dataset d = noisy_dataset(40, 6, 6);
  Hyper h;
  h.epochs = 1;
  TrainOptions o;
  o.validation = &d;
  CHECK_THROWS_AS(train(d, h, o), DataError);
}

}  // TEST_SUITE
