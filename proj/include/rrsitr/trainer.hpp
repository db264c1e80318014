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

// Alternating self-paced training of the projection heads: per batch, freeze
// buckets/weights/margins at the current parameters, then take one AdamW
// step on the frozen objective.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "rrsitr/dataset.hpp"
#include "rrsitr/evaluation.hpp"
#include "rrsitr/heads.hpp"
#include "rrsitr/hyper.hpp"
#include "rrsitr/selfpaced.hpp"

namespace rrsitr {

struct GradientResult {
  ProjectionHeads grad;
  ObjectiveValue value;
  PerPairLoss loss;
  ObjectiveState state;
};

// Freezes the objective state at `heads` and differentiates L_overall.
GradientResult gradients(const ProjectionHeads& heads, const PairBatch& batch,
                         const Hyper& hyper, Variant variant = Variant::kFull,
                         std::uint64_t random_seed = 0);

// Same, with a caller-supplied frozen state.
GradientResult gradients_frozen(const ProjectionHeads& heads, const PairBatch& batch,
                                const Hyper& hyper, Variant variant,
                                const ObjectiveState& state);

// L_overall under a frozen state; what finite differences are taken of.
double objective_frozen(const ProjectionHeads& heads, const PairBatch& batch,
                        const Hyper& hyper, Variant variant, const ObjectiveState& state);

// Linear warm-up from 0 to hyper.lr over warmup_steps, then cosine decay to 0
// at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, const Hyper& hyper);

// Rescales grad in place so its L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

// Adam with decoupled weight decay applied to weight matrices only.
class AdamW {
 public:
  AdamW(Eigen::Index n_params, Eigen::VectorXd decay_mask);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr,
            double weight_decay);
  std::size_t steps() const { return t_; }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  Eigen::VectorXd decay_mask_;
  std::size_t t_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double overall = 0;  // mean over the epoch's batches
  double s1 = 0;
  double s2 = 0;
  double soft = 0;
  std::size_t n_clean = 0;
  std::size_t n_ambiguous = 0;
  std::size_t n_noisy = 0;
  double gamma2 = 0;
  double lr_last = 0;
  double mean_weight = 0;
  std::array<std::size_t, 10> weight_hist{};  // [0, 0.1), ..., [0.9, 1]
  std::optional<double> val_mr;
  double wall_seconds = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::map<std::size_t, std::vector<PairTrace>> traces;  // epoch -> rows
  std::size_t best_epoch = 0;  // 0 when no validation split was given
  double initial_overall = 0;  // full-objective mean before any update
};

struct TrainOptions {
  Variant variant = Variant::kFull;
  const Dataset* validation = nullptr;
  std::set<std::size_t> trace_epochs;
  bool trace_last_epoch = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ProjectionHeads heads;        // best validation checkpoint (final if none)
  ProjectionHeads final_heads;
  TrainLog log;
};

TrainResult train(const Dataset& train_set, const Hyper& hyper,
                  const TrainOptions& options = {});

// train() with the variant's objective substitution.
TrainResult ablate(const Dataset& train_set, const Hyper& hyper, Variant variant,
                   TrainOptions options = {});

// Whether evaluation of this variant fuses in the local similarity.
bool variant_uses_local(Variant v);

// JSON-lines record; wall-clock is only written when include_timing is set
// so that logs of identical runs are byte-identical.
nlohmann::json to_json(const EpochRecord& record, bool include_timing = false);
void write_train_log(const TrainLog& log, const std::filesystem::path& path,
                     bool include_timing = false);

}  // namespace rrsitr
