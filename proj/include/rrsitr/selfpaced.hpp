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

// Self-paced weighting: loss-based clean / ambiguous / noisy partition, the
// arccos regularizer and its closed-form minimizer, and the assembled
// training objective L_S1 + lambda1 * L_S2 + lambda2 * L_soft.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rrsitr/hyper.hpp"
#include "rrsitr/losses.hpp"
#include "rrsitr/similarity.hpp"

namespace rrsitr {

enum class Bucket : std::uint8_t { kClean = 0, kAmbiguous = 1, kNoisy = 2 };

std::string_view to_string(Bucket b);

struct Partition {
  std::vector<std::size_t> clean;
  std::vector<std::size_t> ambiguous;
  std::vector<std::size_t> noisy;
  std::vector<Bucket> bucket_of;
  double gamma1 = 0;
  double gamma2 = 0;
};

// l < gamma1 -> clean, gamma1 <= l < gamma2 -> ambiguous, l >= gamma2 -> noisy.
// Requires 0 < gamma1 < gamma2.
Partition partition(std::span<const double> loss, double gamma1, double gamma2);

// Clean below gamma, noisy otherwise; the ambiguous set is empty.
Partition single_threshold_partition(std::span<const double> loss, double gamma);

// R(w, gamma) = -(2/pi) * gamma * (w * acos(w) - sqrt(1 - w^2)) if l < gamma,
// else 0.
double regularizer(double w, double gamma, double loss);

// argmin_w w*l + R(w, gamma) in closed form: cos(pi/2 * l/gamma), 0 once
// l >= gamma.
double optimal_weight(double loss, double gamma);

// Brute-force minimizer over a uniform grid of grid_steps+1 points on [0, 1].
// Test oracle for optimal_weight.
double optimal_weight_oracle(double loss, double gamma, std::size_t grid_steps);

// Per-pair weights and the threshold each one was derived from (0 for pairs
// that received no threshold).
struct SplWeights {
  std::vector<double> w;
  std::vector<double> gamma_used;
};

// (1/b) * sum_{i in bucket} (w_i * l_i + R(w_i, gamma)).
double weighted_spl_loss(std::span<const double> loss, std::span<const double> weights,
                         std::span<const std::size_t> bucket, double gamma,
                         std::size_t batch_size);

struct PerPairLoss {
  Eigen::VectorXd global;
  Eigen::VectorXd local;
  Eigen::VectorXd total;
};

// With use_local=false the local term is zero and total == global.
PerPairLoss per_pair_loss(const SimilarityBundle<double>& sims, double tau,
                          bool use_local);

// Everything that is held constant while the head parameters take a step:
// buckets, weights, margins and mined negatives.
struct ObjectiveState {
  Partition partition;
  SplWeights weights;
  RtlResult<double> rtl;
  // d(L_S1 + lambda1 * L_S2) / d l_i.
  Eigen::VectorXd loss_coef;
  double lambda2 = 0;  // effective; zero when RTL is ablated
};

ObjectiveState freeze_objective_state(const PerPairLoss& loss,
                                      const Eigen::MatrixXd& global_sim,
                                      const Hyper& hyper, const ObjectiveConfig& config,
                                      std::uint64_t random_seed);

struct ObjectiveValue {
  double overall = 0;
  double s1 = 0;
  double s2 = 0;
  double soft = 0;
};

ObjectiveValue evaluate_objective(const PerPairLoss& loss,
                                  const Eigen::MatrixXd& global_sim,
                                  const ObjectiveState& state, const Hyper& hyper,
                                  const ObjectiveConfig& config);

struct ObjectiveResult {
  ObjectiveValue value;
  PerPairLoss loss;
  ObjectiveState state;
};

// One row of the per-epoch weight trace.
struct PairTrace {
  std::size_t pair_id = 0;
  std::uint8_t y = 1;
  double loss = 0;
  double weight = 0;
  Bucket bucket = Bucket::kClean;
};

// CSV: epoch,pair_id,y,loss,weight,bucket
void write_weight_trace_csv(std::span<const PairTrace> trace, std::size_t epoch,
                            const std::filesystem::path& path);

ObjectiveResult overall_objective(const SimilarityBundle<double>& sims,
                                  const Hyper& hyper, Variant variant = Variant::kFull,
                                  std::uint64_t random_seed = 0);

}  // namespace rrsitr
