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

// Symmetric InfoNCE and the adaptive-margin triplet loss, with their
// gradients with respect to the similarity matrix.
//
// A batch similarity matrix S is b x b: rows are images, columns are texts,
// and the diagonal holds the (assumed) positive pairs.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rrsitr/errors.hpp"

namespace rrsitr {

namespace detail {

template <typename Derived>
void require_batch_matrix(const Eigen::MatrixBase<Derived>& s, const char* who) {
  if (s.rows() != s.cols()) {
    throw ConfigError(std::string(who) + ": similarity matrix must be square");
  }
  if (s.rows() < 2) {
    throw ConfigError(std::string(who) + ": batch size must be >= 2");
  }
}

template <typename Scalar>
void require_positive(Scalar value, const char* what) {
  if (!(value > Scalar(0))) {
    throw ConfigError(std::string(what) + " must be > 0");
  }
}

// log(sum(exp(v))) with the max shifted out.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const auto m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

// l[j] = -(log softmax_row(S/tau)[j][j] + log softmax_col(S/tau)[j][j]).
template <typename Derived>
Eigen::VectorX<typename Derived::Scalar> infonce_per_pair(
    const Eigen::MatrixBase<Derived>& s, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  detail::require_positive(tau, "temperature tau");
  detail::require_batch_matrix(s, "infonce_per_pair");
  const Eigen::MatrixX<Scalar> logits = s / tau;
  const Eigen::Index b = logits.rows();
  Eigen::VectorX<Scalar> out(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Scalar row = detail::log_sum_exp(logits.row(j));
    const Scalar col = detail::log_sum_exp(logits.col(j));
    out[j] = (row - logits(j, j)) + (col - logits(j, j));
  }
  return out;
}

// d/dS of sum_j coef[j] * l[j].
template <typename Derived, typename DerivedC>
Eigen::MatrixX<typename Derived::Scalar> infonce_grad(
    const Eigen::MatrixBase<Derived>& s, typename Derived::Scalar tau,
    const Eigen::MatrixBase<DerivedC>& coef) {
  using Scalar = typename Derived::Scalar;
  detail::require_positive(tau, "temperature tau");
  detail::require_batch_matrix(s, "infonce_grad");
  const Eigen::Index b = s.rows();
  if (coef.size() != b) throw InternalError("infonce_grad: coef length != b");
  const Eigen::MatrixX<Scalar> logits = s / tau;
  Eigen::MatrixX<Scalar> grad = Eigen::MatrixX<Scalar>::Zero(b, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Scalar c = coef(j);
    if (c == Scalar(0)) continue;
    const Scalar row_lse = detail::log_sum_exp(logits.row(j));
    grad.row(j) += (c / tau) * (logits.row(j).array() - row_lse).exp().matrix();
    const Scalar col_lse = detail::log_sum_exp(logits.col(j));
    grad.col(j) += (c / tau) * (logits.col(j).array() - col_lse).exp().matrix();
    grad(j, j) -= Scalar(2) * c / tau;
  }
  return grad;
}

template <typename Scalar>
struct InfoNceBatch {
  Scalar global = 0;
  Scalar local = 0;
  Scalar total = 0;
};

template <typename DerivedG, typename DerivedL>
InfoNceBatch<typename DerivedG::Scalar> infonce_batch(
    const Eigen::MatrixBase<DerivedG>& sg, const Eigen::MatrixBase<DerivedL>& sl,
    typename DerivedG::Scalar tau) {
  InfoNceBatch<typename DerivedG::Scalar> out;
  out.global = infonce_per_pair(sg, tau).mean();
  out.local = infonce_per_pair(sl, tau).mean();
  out.total = out.global + out.local;
  return out;
}

struct HardNegatives {
  std::vector<Eigen::Index> txt;  // argmax_{j != i} S[i][j]
  std::vector<Eigen::Index> img;  // argmax_{j != i} S[j][i]
};

// Ties go to the lowest index.
template <typename Derived>
HardNegatives hardest_negatives(const Eigen::MatrixBase<Derived>& s) {
  detail::require_batch_matrix(s, "hardest_negatives");
  const Eigen::Index b = s.rows();
  HardNegatives out;
  out.txt.resize(static_cast<std::size_t>(b));
  out.img.resize(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::Index best_t = -1;
    Eigen::Index best_v = -1;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (best_t < 0 || s(i, j) > s(i, best_t)) best_t = j;
      if (best_v < 0 || s(j, i) > s(best_v, i)) best_v = j;
    }
    out.txt[static_cast<std::size_t>(i)] = best_t;
    out.img[static_cast<std::size_t>(i)] = best_v;
  }
  return out;
}

template <typename Scalar>
struct Margins {
  Eigen::VectorX<Scalar> mu;    // image anchor, text negative
  Eigen::VectorX<Scalar> zeta;  // text anchor, image negative
};

// mu_i = sigma * (1 + max(0, S[i][t_h] - S[i][i])), zeta_i likewise with the
// hardest image negative.
template <typename Derived>
Margins<typename Derived::Scalar> adaptive_margins(
    const Eigen::MatrixBase<Derived>& s, const HardNegatives& hard,
    typename Derived::Scalar sigma) {
  using Scalar = typename Derived::Scalar;
  detail::require_positive(sigma, "base margin sigma");
  detail::require_batch_matrix(s, "adaptive_margins");
  const Eigen::Index b = s.rows();
  Margins<Scalar> out{Eigen::VectorX<Scalar>(b), Eigen::VectorX<Scalar>(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Scalar pos = s(i, i);
    out.mu[i] = sigma * (Scalar(1) + std::max(Scalar(0), s(i, hard.txt[k]) - pos));
    out.zeta[i] = sigma * (Scalar(1) + std::max(Scalar(0), s(hard.img[k], i) - pos));
  }
  return out;
}

enum class MarginMode { kAdaptive, kFixed };

template <typename Scalar>
struct RtlResult {
  Scalar loss = 0;
  Eigen::VectorX<Scalar> mu_hat;
  Eigen::VectorX<Scalar> zeta_hat;
  std::vector<Eigen::Index> hard_txt_idx;
  std::vector<Eigen::Index> hard_img_idx;
  // Anchors that contribute; the sum is still divided by the full b.
  std::vector<std::uint8_t> active;
};

// Loss with margins, hardest negatives and active anchors taken from
// `frozen`; this is what gradients are taken of.
template <typename Derived>
typename Derived::Scalar rtl_value(const Eigen::MatrixBase<Derived>& s,
                                   const RtlResult<typename Derived::Scalar>& frozen) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index b = s.rows();
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!frozen.active[k]) continue;
    const Scalar pos = s(i, i);
    sum += std::max(Scalar(0), frozen.mu_hat[i] - pos + s(i, frozen.hard_txt_idx[k]));
    sum += std::max(Scalar(0), frozen.zeta_hat[i] - pos + s(frozen.hard_img_idx[k], i));
  }
  return sum / static_cast<Scalar>(b);
}

// d rtl_value / dS, scaled by `scale`.
template <typename Derived>
Eigen::MatrixX<typename Derived::Scalar> rtl_grad(
    const Eigen::MatrixBase<Derived>& s,
    const RtlResult<typename Derived::Scalar>& frozen,
    typename Derived::Scalar scale) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index b = s.rows();
  Eigen::MatrixX<Scalar> grad = Eigen::MatrixX<Scalar>::Zero(b, b);
  const Scalar unit = scale / static_cast<Scalar>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!frozen.active[k]) continue;
    const Scalar pos = s(i, i);
    const Eigen::Index ht = frozen.hard_txt_idx[k];
    const Eigen::Index hv = frozen.hard_img_idx[k];
    if (frozen.mu_hat[i] - pos + s(i, ht) > Scalar(0)) {
      grad(i, i) -= unit;
      grad(i, ht) += unit;
    }
    if (frozen.zeta_hat[i] - pos + s(hv, i) > Scalar(0)) {
      grad(i, i) -= unit;
      grad(hv, i) += unit;
    }
  }
  return grad;
}

// Mines hardest negatives, sets margins (adaptive or constant sigma) and
// evaluates the hinge loss. `active` restricts the anchors; empty = all.
template <typename Derived>
RtlResult<typename Derived::Scalar> robust_triplet_loss(
    const Eigen::MatrixBase<Derived>& s, typename Derived::Scalar sigma,
    MarginMode mode = MarginMode::kAdaptive, std::vector<std::uint8_t> active = {}) {
  using Scalar = typename Derived::Scalar;
  detail::require_positive(sigma, "base margin sigma");
  detail::require_batch_matrix(s, "robust_triplet_loss");
  const Eigen::Index b = s.rows();
  if (active.empty()) active.assign(static_cast<std::size_t>(b), 1);
  if (active.size() != static_cast<std::size_t>(b)) {
    throw InternalError("robust_triplet_loss: anchor mask length != b");
  }
  auto hard = hardest_negatives(s);
  RtlResult<Scalar> out;
  if (mode == MarginMode::kAdaptive) {
    auto margins = adaptive_margins(s, hard, sigma);
    out.mu_hat = std::move(margins.mu);
    out.zeta_hat = std::move(margins.zeta);
  } else {
    out.mu_hat = Eigen::VectorX<Scalar>::Constant(b, sigma);
    out.zeta_hat = Eigen::VectorX<Scalar>::Constant(b, sigma);
  }
  out.hard_txt_idx = std::move(hard.txt);
  out.hard_img_idx = std::move(hard.img);
  out.active = std::move(active);
  out.loss = rtl_value(s, out);
  return out;
}

}  // namespace rrsitr
