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


// Central finite differences of the frozen objective against the analytic
// gradient, over a random subset of head parameters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "rrsitr/trainer.hpp"

namespace rrsitr::test {

struct FdResult {
  double max_rel_error = 0;
  std::size_t n_checked = 0;
};

// |a - f| / max(|a|, |f|, floor); the floor keeps parameters whose true
// derivative is ~0 from dominating through round-off alone.
inline FdResult finite_difference_check(const ProjectionHeads& heads, const PairBatch& batch,
                                        const Hyper& hyper, Variant variant,
                                        const ObjectiveState& state, std::size_t n_params,
                                        std::uint64_t seed, double h = 1e-5,
                                        double floor = 1e-4) {
  const GradientResult analytic = gradients_frozen(heads, batch, hyper, variant, state);
  const Eigen::VectorXd g = analytic.grad.flatten();
  const Eigen::VectorXd base = heads.flatten();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(base.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(order.size(), n_params));

  FdResult out;
  ProjectionHeads probe = heads;
  for (Eigen::Index k : order) {
    Eigen::VectorXd p = base;
    p[k] += h;
    probe.unflatten(p);
    const double up = objective_frozen(probe, batch, hyper, variant, state);
    p[k] = base[k] - h;
    probe.unflatten(p);
    const double down = objective_frozen(probe, batch, hyper, variant, state);
    const double fd = (up - down) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(g[k]), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - g[k]) / scale);
    ++out.n_checked;
  }
  return out;
}

// Sets gamma1/gamma2 at the 1/3 and 2/3 loss quantiles of the batch so that
// every bucket is populated.
inline Hyper with_three_buckets(const ProjectionHeads& heads, const PairBatch& batch,
                                Hyper hyper) {
  const auto probe = gradients(heads, batch, hyper, Variant::kFull, 0);
  std::vector<double> l(probe.loss.total.data(),
                        probe.loss.total.data() + probe.loss.total.size());
  std::sort(l.begin(), l.end());
  const std::size_t n = l.size();
  hyper.gamma1 = 0.5 * (l[n / 3 - 1] + l[n / 3]);
  hyper.gamma2 = 0.5 * (l[2 * n / 3 - 1] + l[2 * n / 3]);
  return hyper;
}

}  // namespace rrsitr::test
