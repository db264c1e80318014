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

#include "rrsitr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "rrsitr/errors.hpp"
#include "rrsitr/losses.hpp"

namespace rrsitr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent deterministic streams derived from the run seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpochStream = 2;
constexpr std::uint64_t kWeightStream = 3;

// Forward pass through heads and similarities, keeping what backward needs.
struct Pass {
  ProjectedBatch projected;
  Eigen::MatrixXd local_cosines;  // (b*d1) x (b*d2)
  SimilarityBundle<double> sims;
  PerPairLoss loss;
};

Pass run_forward(const ProjectionHeads& heads, const PairBatch& batch, const Hyper& hyper,
                 const ObjectiveConfig& config) {
  if (batch.size() < 2) throw ConfigError("batch size must be >= 2");
  Pass pass;
  pass.projected = forward(heads, batch);
  const auto& p = pass.projected;
  Eigen::MatrixXd global = p.image.global() * p.text.global().transpose();
  pass.local_cosines = p.image.local() * p.text.local().transpose();
  Eigen::MatrixXd local =
      aggregate_local(pass.local_cosines, p.d1, p.d2, hyper.local_aggregation);
  pass.sims = make_bundle(std::move(global), std::move(local), hyper.alpha);
  pass.loss = per_pair_loss(pass.sims, hyper.tau, config.use_local);
  return pass;
}

// dL/dcosines given dL/dSl.
Eigen::MatrixXd local_backward(const Eigen::MatrixXd& cosines, const Eigen::MatrixXd& d_local,
                               Eigen::Index d1, Eigen::Index d2, LocalAggregation agg) {
  Eigen::MatrixXd out(cosines.rows(), cosines.cols());
  const double cells = static_cast<double>(d1 * d2);
  for (Eigen::Index j = 0; j < d_local.cols(); ++j) {
    for (Eigen::Index i = 0; i < d_local.rows(); ++i) {
      auto block = out.block(i * d1, j * d2, d1, d2);
      const double g = d_local(i, j);
      if (agg == LocalAggregation::kMeanCosine) {
        block.setConstant(g / cells);
        continue;
      }
      const auto m = cosines.block(i * d1, j * d2, d1, d2);
      const double fro = m.norm();
      if (fro > 0.0 && g != 0.0) {
        block = m * (g / (fro * std::sqrt(cells)));
      } else {
        block.setZero();
      }
    }
  }
  return out;
}

// Through u = z / (||z|| + eps) and z = x W^T + b.
void modality_backward(const ProjectedModality& m, const Eigen::MatrixXd& d_unit,
                       Eigen::MatrixXd& d_w, Eigen::VectorXd& d_b) {
  Eigen::MatrixXd d_pre(m.pre.rows(), m.pre.cols());
  for (Eigen::Index r = 0; r < m.pre.rows(); ++r) {
    const double n = m.norm[r];
    const double s = n + kNormEpsilon;
    const double proj = m.pre.row(r).dot(d_unit.row(r)) / (n * s * s);
    d_pre.row(r) = d_unit.row(r) / s - proj * m.pre.row(r);
  }
  d_w.noalias() += d_pre.transpose() * m.input;
  d_b += d_pre.colwise().sum().transpose();
}

GradientResult backward(const ProjectionHeads& heads, const Pass& pass, const Hyper& hyper,
                        const ObjectiveConfig& config, const ObjectiveState& state) {
  const auto& p = pass.projected;

  GradientResult out;
  out.value = evaluate_objective(pass.loss, pass.sims.global, state, hyper, config);
  out.loss = pass.loss;
  out.state = state;

  Eigen::MatrixXd d_global = infonce_grad(pass.sims.global, hyper.tau, state.loss_coef);
  if (state.lambda2 != 0.0) {
    d_global += rtl_grad(pass.sims.global, state.rtl, state.lambda2);
  }

  const Eigen::Index n_img_global = p.image.n_global;
  const Eigen::Index n_txt_global = p.text.n_global;
  Eigen::MatrixXd d_img = Eigen::MatrixXd::Zero(p.image.unit.rows(), p.image.unit.cols());
  Eigen::MatrixXd d_txt = Eigen::MatrixXd::Zero(p.text.unit.rows(), p.text.unit.cols());
  d_img.topRows(n_img_global).noalias() = d_global * p.text.global();
  d_txt.topRows(n_txt_global).noalias() = d_global.transpose() * p.image.global();

  if (config.use_local) {
    const Eigen::MatrixXd d_local = infonce_grad(pass.sims.local, hyper.tau, state.loss_coef);
    const Eigen::MatrixXd d_cos =
        local_backward(pass.local_cosines, d_local, p.d1, p.d2, hyper.local_aggregation);
    d_img.bottomRows(d_img.rows() - n_img_global).noalias() = d_cos * p.text.local();
    d_txt.bottomRows(d_txt.rows() - n_txt_global).noalias() =
        d_cos.transpose() * p.image.local();
  }

  out.grad = ProjectionHeads::zeros_like(heads);
  modality_backward(p.image, d_img, out.grad.w_img, out.grad.b_img);
  modality_backward(p.text, d_txt, out.grad.w_txt, out.grad.b_txt);
  return out;
}

}  // namespace

GradientResult gradients_frozen(const ProjectionHeads& heads, const PairBatch& batch,
                                const Hyper& hyper, Variant variant,
                                const ObjectiveState& state) {
  const auto config = ObjectiveConfig::for_variant(variant);
  return backward(heads, run_forward(heads, batch, hyper, config), hyper, config, state);
}

GradientResult gradients(const ProjectionHeads& heads, const PairBatch& batch,
                         const Hyper& hyper, Variant variant, std::uint64_t random_seed) {
  const auto config = ObjectiveConfig::for_variant(variant);
  const Pass pass = run_forward(heads, batch, hyper, config);
  const ObjectiveState state =
      freeze_objective_state(pass.loss, pass.sims.global, hyper, config, random_seed);
  return backward(heads, pass, hyper, config, state);
}

double objective_frozen(const ProjectionHeads& heads, const PairBatch& batch,
                        const Hyper& hyper, Variant variant, const ObjectiveState& state) {
  const auto config = ObjectiveConfig::for_variant(variant);
  const Pass pass = run_forward(heads, batch, hyper, config);
  return evaluate_objective(pass.loss, pass.sims.global, state, hyper, config).overall;
}

double lr_at(std::size_t step, std::size_t total_steps, const Hyper& hyper) {
  const auto warmup = hyper.warmup_steps;
  if (step < warmup) {
    return hyper.lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (total_steps <= warmup) return hyper.lr;
  if (step >= total_steps) return 0.0;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return 0.5 * hyper.lr * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

AdamW::AdamW(Eigen::Index n_params, Eigen::VectorXd decay_mask)
    : m_(Eigen::VectorXd::Zero(n_params)),
      v_(Eigen::VectorXd::Zero(n_params)),
      decay_mask_(std::move(decay_mask)) {
  if (decay_mask_.size() != n_params) throw InternalError("AdamW: decay mask size");
}

void AdamW::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr,
                 double weight_decay) {
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  params.array() -= lr * weight_decay * decay_mask_.array() * params.array();
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
}

bool variant_uses_local(Variant v) {
  return ObjectiveConfig::for_variant(v).use_local;
}

TrainResult train(const Dataset& train_set, const Hyper& hyper,
                  const TrainOptions& options) {
  hyper.validate();
  train_set.validate();
  const auto config = ObjectiveConfig::for_variant(options.variant);
  const bool eval_local = config.use_local;
  const std::size_t dim_out = hyper.dim_out == 0 ? train_set.dim : hyper.dim_out;

  TrainResult result;
  ProjectionHeads heads = ProjectionHeads::init(
      train_set.dim, dim_out, hyper.init_noise_std,
      stream_seed(hyper.seed, kInitStream, 0));
  result.heads = heads;
  result.final_heads = heads;
  if (options.validation != nullptr && options.validation->n_noisy() != 0) {
    throw DataError("validation split must be clean (all y=1)");
  }
  if (hyper.epochs == 0) return result;

  const std::size_t batches_per_epoch =
      batch_indices(train_set.n_pairs(), hyper.batch_size, 0).size();
  if (batches_per_epoch == 0) throw ConfigError("training set yields no batch of size >= 2");
  const std::size_t total_steps = hyper.epochs * batches_per_epoch;

  {
    Hyper h = hyper;
    h.gamma2 = hyper.gamma2_at(1);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& batch : batch_iter(train_set, hyper.batch_size,
                                        stream_seed(hyper.seed, kEpochStream, 1))) {
      const Pass pass = run_forward(heads, batch, h, config);
      const auto state = freeze_objective_state(pass.loss, pass.sims.global, h, config,
                                                stream_seed(hyper.seed, kWeightStream, 0));
      sum += evaluate_objective(pass.loss, pass.sims.global, state, h, config).overall;
      ++count;
    }
    result.log.initial_overall = sum / static_cast<double>(count);
  }

  AdamW optimizer(heads.num_params(), heads.weight_mask());
  Eigen::VectorXd params = heads.flatten();
  double best_mr = -1.0;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Hyper h = hyper;
    h.gamma2 = hyper.gamma2_at(epoch);
    const bool trace = options.trace_epochs.contains(epoch) ||
                       (options.trace_last_epoch && epoch == hyper.epochs);
    std::vector<PairTrace> rows;

    EpochRecord record;
    record.epoch = epoch;
    record.gamma2 = h.gamma2;
    double weight_sum = 0.0;
    std::size_t weight_count = 0;

    for (const auto& batch : batch_iter(train_set, hyper.batch_size,
                                        stream_seed(hyper.seed, kEpochStream, epoch))) {
      GradientResult g;
      try {
        g = gradients(heads, batch, h, options.variant,
                      stream_seed(hyper.seed, kWeightStream, step));
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) + ")");
      }
      Eigen::VectorXd grad = g.grad.flatten();
      if (!grad.allFinite()) {
        throw NumericError("non-finite gradient (epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) + ")");
      }
      clip_grad_norm(grad, hyper.max_grad_norm);
      const double lr = lr_at(step, total_steps, hyper);
      optimizer.step(params, grad, lr, hyper.weight_decay);
      heads.unflatten(params);

      record.overall += g.value.overall;
      record.s1 += g.value.s1;
      record.s2 += g.value.s2;
      record.soft += g.value.soft;
      record.n_clean += g.state.partition.clean.size();
      record.n_ambiguous += g.state.partition.ambiguous.size();
      record.n_noisy += g.state.partition.noisy.size();
      record.lr_last = lr;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const double w = g.state.weights.w[k];
        weight_sum += w;
        ++weight_count;
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(w * 10.0));
        ++record.weight_hist[bin];
        if (trace) {
          rows.push_back(PairTrace{batch.indices[k], batch.y[k],
                                   g.loss.total[static_cast<Eigen::Index>(k)], w,
                                   g.state.partition.bucket_of[k]});
        }
      }
      ++record.steps;
      ++step;
    }

    const double n_steps = static_cast<double>(record.steps);
    record.overall /= n_steps;
    record.s1 /= n_steps;
    record.s2 /= n_steps;
    record.soft /= n_steps;
    record.mean_weight = weight_count ? weight_sum / static_cast<double>(weight_count) : 0.0;

    if (options.validation != nullptr) {
      const double mr = evaluate(heads, *options.validation, hyper, eval_local).mr;
      record.val_mr = mr;
      if (mr > best_mr) {
        best_mr = mr;
        result.heads = heads;
        result.log.best_epoch = epoch;
      }
    }
    record.wall_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    if (trace) {
      std::sort(rows.begin(), rows.end(),
                [](const PairTrace& a, const PairTrace& b) { return a.pair_id < b.pair_id; });
      result.log.traces[epoch] = std::move(rows);
    }
    result.log.epochs.push_back(record);
    if (options.on_epoch) options.on_epoch(record);
  }

  result.final_heads = heads;
  if (options.validation == nullptr) result.heads = heads;
  return result;
}

TrainResult ablate(const Dataset& train_set, const Hyper& hyper, Variant variant,
                   TrainOptions options) {
  options.variant = variant;
  return train(train_set, hyper, options);
}

nlohmann::json to_json(const EpochRecord& r, bool include_timing) {
  nlohmann::json j{{"epoch", r.epoch},
                   {"steps", r.steps},
                   {"L_overall", r.overall},
                   {"L_S1", r.s1},
                   {"L_S2", r.s2},
                   {"L_soft", r.soft},
                   {"n_clean", r.n_clean},
                   {"n_ambiguous", r.n_ambiguous},
                   {"n_noisy", r.n_noisy},
                   {"gamma2", r.gamma2},
                   {"lr_last", r.lr_last},
                   {"mean_weight", r.mean_weight},
                   {"weight_hist", r.weight_hist}};
  j["val_mr"] = r.val_mr ? nlohmann::json(*r.val_mr) : nlohmann::json(nullptr);
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

void write_train_log(const TrainLog& log, const std::filesystem::path& path,
                     bool include_timing) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& record : log.epochs) {
    out << to_json(record, include_timing).dump() << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace rrsitr
