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

#include "rrsitr/selfpaced.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "rrsitr/errors.hpp"

namespace rrsitr {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

// Per-pair losses are non-negative up to rounding.
double checked_loss(double loss) {
  if (std::isnan(loss)) throw NumericError("per-pair loss is NaN");
  if (loss < -1e-9) {
    throw ConfigError("per-pair loss must be >= 0, got " + std::to_string(loss));
  }
  return std::max(loss, 0.0);
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("pace parameter gamma must be > 0");
}

Partition classify(std::span<const double> loss, double gamma1, double gamma2) {
  Partition p;
  p.gamma1 = gamma1;
  p.gamma2 = gamma2;
  p.bucket_of.reserve(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const double l = loss[i];
    if (std::isnan(l)) throw NumericError("per-pair loss is NaN");
    Bucket b = Bucket::kNoisy;
    if (l < gamma1) {
      b = Bucket::kClean;
      p.clean.push_back(i);
    } else if (l < gamma2) {
      b = Bucket::kAmbiguous;
      p.ambiguous.push_back(i);
    } else {
      p.noisy.push_back(i);
    }
    p.bucket_of.push_back(b);
  }
  return p;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::kClean:
      return "clean";
    case Bucket::kAmbiguous:
      return "ambiguous";
    case Bucket::kNoisy:
      return "noisy";
  }
  return "noisy";
}

Partition partition(std::span<const double> loss, double gamma1, double gamma2) {
  if (!(gamma1 > 0.0 && gamma1 < gamma2)) {
    throw ConfigError("partition requires 0 < gamma1 < gamma2");
  }
  return classify(loss, gamma1, gamma2);
}

Partition single_threshold_partition(std::span<const double> loss, double gamma) {
  require_gamma(gamma);
  return classify(loss, gamma, gamma);
}

double regularizer(double w, double gamma, double loss) {
  require_gamma(gamma);
  if (!(w >= 0.0 && w <= 1.0)) {
    throw NumericError("self-paced weight outside [0, 1]: " + std::to_string(w));
  }
  if (!(loss < gamma)) return 0.0;
  return -(2.0 / std::numbers::pi) * gamma *
         (w * std::acos(w) - std::sqrt(1.0 - w * w));
}

double optimal_weight(double loss, double gamma) {
  require_gamma(gamma);
  const double l = checked_loss(loss);
  if (l >= gamma) return 0.0;
  return std::cos(kHalfPi * l / gamma);
}

double optimal_weight_oracle(double loss, double gamma, std::size_t grid_steps) {
  require_gamma(gamma);
  if (grid_steps < 1000) throw ConfigError("oracle grid needs >= 1000 steps");
  double best_w = 0.0;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= grid_steps; ++k) {
    const double w = static_cast<double>(k) / static_cast<double>(grid_steps);
    const double f = w * loss + regularizer(w, gamma, loss);
    if (f < best_f) {
      best_f = f;
      best_w = w;
    }
  }
  return best_w;
}

double weighted_spl_loss(std::span<const double> loss, std::span<const double> weights,
                         std::span<const std::size_t> bucket, double gamma,
                         std::size_t batch_size) {
  if (loss.size() != weights.size()) {
    throw InternalError("weighted_spl_loss: loss and weight lengths differ");
  }
  if (batch_size == 0) throw InternalError("weighted_spl_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i : bucket) {
    if (i >= loss.size()) throw InternalError("weighted_spl_loss: bucket index out of range");
    sum += weights[i] * loss[i] + regularizer(weights[i], gamma, loss[i]);
  }
  return sum / static_cast<double>(batch_size);
}

PerPairLoss per_pair_loss(const SimilarityBundle<double>& sims, double tau,
                          bool use_local) {
  PerPairLoss out;
  out.global = infonce_per_pair(sims.global, tau);
  out.local = use_local ? infonce_per_pair(sims.local, tau)
                        : Eigen::VectorXd::Zero(out.global.size()).eval();
  out.total = out.global + out.local;
  return out;
}

ObjectiveState freeze_objective_state(const PerPairLoss& loss,
                                      const Eigen::MatrixXd& global_sim,
                                      const Hyper& hyper, const ObjectiveConfig& config,
                                      std::uint64_t random_seed) {
  const auto l = as_span(loss.total);
  const std::size_t b = l.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  ObjectiveState state;
  state.partition = config.single_threshold
                        ? single_threshold_partition(l, hyper.gamma1)
                        : partition(l, hyper.gamma1, hyper.gamma2);
  state.weights.w.assign(b, 0.0);
  state.weights.gamma_used.assign(b, 0.0);
  state.loss_coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b));

  std::mt19937_64 rng(random_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < b; ++i) {
    const Bucket bucket = state.partition.bucket_of[i];
    auto& w = state.weights.w[i];
    if (config.weight_rule == WeightRule::kUnit) {
      w = 1.0;
      state.loss_coef[static_cast<Eigen::Index>(i)] = inv_b;
      continue;
    }
    if (bucket == Bucket::kNoisy) continue;
    const double gamma = bucket == Bucket::kClean ? hyper.gamma1 : hyper.gamma2;
    state.weights.gamma_used[i] = gamma;
    switch (config.weight_rule) {
      case WeightRule::kClosedForm:
        w = optimal_weight(l[i], gamma);
        break;
      case WeightRule::kHardToEasy:
        w = 1.0 - optimal_weight(l[i], gamma);
        break;
      case WeightRule::kRandom:
        w = uniform(rng);
        break;
      case WeightRule::kUnit:
        break;
    }
    double coef = 0.0;
    if (bucket == Bucket::kClean) {
      coef = w;
    } else {
      coef = hyper.lambda1 * w + (hyper.s1_includes_ambiguous ? w : 0.0);
    }
    state.loss_coef[static_cast<Eigen::Index>(i)] = coef * inv_b;
  }

  std::vector<std::uint8_t> active(b, 1);
  if (hyper.rtl_scope == RtlScope::kNoisyOnly) {
    for (std::size_t i = 0; i < b; ++i) {
      active[i] = state.partition.bucket_of[i] == Bucket::kNoisy ? 1 : 0;
    }
  }
  state.rtl = robust_triplet_loss(global_sim, hyper.sigma, config.margin_mode,
                                  std::move(active));
  state.lambda2 = config.use_rtl ? hyper.lambda2 : 0.0;
  return state;
}

ObjectiveValue evaluate_objective(const PerPairLoss& loss,
                                  const Eigen::MatrixXd& global_sim,
                                  const ObjectiveState& state, const Hyper& hyper,
                                  const ObjectiveConfig& config) {
  const auto l = as_span(loss.total);
  const std::size_t b = l.size();
  const auto& p = state.partition;
  ObjectiveValue v;
  if (config.weight_rule == WeightRule::kUnit) {
    v.s1 = loss.total.mean();
  } else {
    const auto& w = state.weights.w;
    v.s1 = weighted_spl_loss(l, w, p.clean, p.gamma1, b);
    if (hyper.s1_includes_ambiguous) {
      v.s1 += weighted_spl_loss(l, w, p.ambiguous, p.gamma1, b);
    }
    v.s2 = weighted_spl_loss(l, w, p.ambiguous, p.gamma2, b);
  }
  v.soft = rtl_value(global_sim, state.rtl);
  v.overall = v.s1 + hyper.lambda1 * v.s2 + state.lambda2 * v.soft;

  if (!std::isfinite(v.s1)) throw NumericError("non-finite objective term L_S1");
  if (!std::isfinite(v.s2)) throw NumericError("non-finite objective term L_S2");
  if (!std::isfinite(v.soft)) throw NumericError("non-finite objective term L_soft");
  return v;
}

ObjectiveResult overall_objective(const SimilarityBundle<double>& sims,
                                  const Hyper& hyper, Variant variant,
                                  std::uint64_t random_seed) {
  hyper.validate();
  const auto config = ObjectiveConfig::for_variant(variant);
  ObjectiveResult out;
  out.loss = per_pair_loss(sims, hyper.tau, config.use_local);
  out.state = freeze_objective_state(out.loss, sims.global, hyper, config, random_seed);
  out.value = evaluate_objective(out.loss, sims.global, out.state, hyper, config);
  return out;
}

void write_weight_trace_csv(std::span<const PairTrace> trace, std::size_t epoch,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "epoch,pair_id,y,loss,weight,bucket\n";
  for (const auto& row : trace) {
    out << epoch << ',' << row.pair_id << ',' << int{row.y} << ',' << row.loss << ','
        << row.weight << ',' << to_string(row.bucket) << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace rrsitr
