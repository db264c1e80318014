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

// Global, local and fused image-text similarity matrices.
//
// Embeddings are stacked one per row. Local features of item i occupy rows
// [i*d, (i+1)*d) of the local block.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "rrsitr/errors.hpp"

namespace rrsitr {

// Guard added to every norm before division.
inline constexpr double kNormEpsilon = 1e-12;

enum class LocalAggregation {
  // ||M||_F / sqrt(d1*d2) of the local cosine matrix; lies in [0, 1].
  kNormalizedFrobenius,
  // Mean of the local cosine matrix; keeps the sign, lies in [-1, 1].
  kMeanCosine,
};

LocalAggregation parse_local_aggregation(std::string_view name);
std::string_view to_string(LocalAggregation agg);

template <typename Scalar>
struct SimilarityBundle {
  Eigen::MatrixX<Scalar> global;  // Sg
  Eigen::MatrixX<Scalar> local;   // Sl
  Eigen::MatrixX<Scalar> fused;   // Sf
  Scalar alpha = Scalar(0.9);
};

// Divides each row by (norm + kNormEpsilon). Throws on an exactly zero row.
template <typename Derived>
Eigen::MatrixX<typename Derived::Scalar> normalize_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Eigen::MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar n = x.row(r).norm();
    if (!(n > Scalar(0))) {
      throw NumericError("zero-norm embedding row " + std::to_string(r));
    }
    out.row(r) = x.row(r) / (n + Scalar(kNormEpsilon));
  }
  return out;
}

// Sg[i][j] = cos(img_i, txt_j).
template <typename DerivedA, typename DerivedB>
Eigen::MatrixX<typename DerivedA::Scalar> global_similarity(
    const Eigen::MatrixBase<DerivedA>& img, const Eigen::MatrixBase<DerivedB>& txt) {
  if (img.cols() != txt.cols()) {
    throw ConfigError("global_similarity: embedding widths differ");
  }
  return normalize_rows(img) * normalize_rows(txt).transpose();
}

// Reduces one d1 x d2 local cosine block to a scalar.
template <typename Derived>
typename Derived::Scalar aggregate_local_block(
    const Eigen::MatrixBase<Derived>& block, LocalAggregation agg) {
  using Scalar = typename Derived::Scalar;
  const auto cells = static_cast<Scalar>(block.rows() * block.cols());
  switch (agg) {
    case LocalAggregation::kNormalizedFrobenius:
      return block.norm() / std::sqrt(cells);
    case LocalAggregation::kMeanCosine:
      return block.sum() / cells;
  }
  return Scalar(0);
}

// Aggregates the full local cosine matrix (b1*d1 x b2*d2) into b1 x b2.
template <typename Derived>
Eigen::MatrixX<typename Derived::Scalar> aggregate_local(
    const Eigen::MatrixBase<Derived>& cosines, Eigen::Index d1, Eigen::Index d2,
    LocalAggregation agg) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index b1 = cosines.rows() / d1;
  const Eigen::Index b2 = cosines.cols() / d2;
  Eigen::MatrixX<Scalar> out(b1, b2);
  for (Eigen::Index j = 0; j < b2; ++j) {
    for (Eigen::Index i = 0; i < b1; ++i) {
      out(i, j) = aggregate_local_block(cosines.block(i * d1, j * d2, d1, d2), agg);
    }
  }
  return out;
}

// local_similarity for rows that are already unit-norm. Chunked over images
// so large evaluation sets never hold the full (b1*d1) x (b2*d2) matrix.
template <typename DerivedA, typename DerivedB>
Eigen::MatrixX<typename DerivedA::Scalar> local_similarity_unit(
    const Eigen::MatrixBase<DerivedA>& img_unit, const Eigen::MatrixBase<DerivedB>& txt_unit,
    Eigen::Index d1, Eigen::Index d2, LocalAggregation agg) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index b1 = img_unit.rows() / d1;
  const Eigen::Index b2 = txt_unit.rows() / d2;
  const Eigen::MatrixX<Scalar> txt_t = txt_unit.transpose();
  constexpr Eigen::Index kChunk = 64;
  Eigen::MatrixX<Scalar> out(b1, b2);
  for (Eigen::Index start = 0; start < b1; start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, b1 - start);
    const Eigen::MatrixX<Scalar> cosines = img_unit.middleRows(start * d1, rows * d1) * txt_t;
    out.middleRows(start, rows) = aggregate_local(cosines, d1, d2, agg);
  }
  return out;
}

// Sl[i][j] from the d1 x d2 cosine matrix between image i's and text j's
// local features.
template <typename DerivedA, typename DerivedB>
Eigen::MatrixX<typename DerivedA::Scalar> local_similarity(
    const Eigen::MatrixBase<DerivedA>& img_local,
    const Eigen::MatrixBase<DerivedB>& txt_local, Eigen::Index d1, Eigen::Index d2,
    LocalAggregation agg = LocalAggregation::kNormalizedFrobenius) {
  if (d1 < 1 || d2 < 1) throw ConfigError("local_similarity: d1, d2 >= 1");
  if (img_local.cols() != txt_local.cols()) {
    throw ConfigError("local_similarity: embedding widths differ");
  }
  if (img_local.rows() % d1 != 0 || txt_local.rows() % d2 != 0) {
    throw ConfigError("local_similarity: row count not a multiple of d1/d2");
  }
  return local_similarity_unit(normalize_rows(img_local), normalize_rows(txt_local),
                               d1, d2, agg);
}

// Sf = alpha * Sg + (1 - alpha) * Sl.
template <typename DerivedA, typename DerivedB>
Eigen::MatrixX<typename DerivedA::Scalar> fused_similarity(
    const Eigen::MatrixBase<DerivedA>& global,
    const Eigen::MatrixBase<DerivedB>& local, typename DerivedA::Scalar alpha) {
  using Scalar = typename DerivedA::Scalar;
  if (global.rows() != local.rows() || global.cols() != local.cols()) {
    throw ConfigError("fused_similarity: Sg and Sl shapes differ");
  }
  if (!(alpha >= Scalar(0) && alpha <= Scalar(1))) {
    throw ConfigError("fused_similarity: alpha must lie in [0, 1]");
  }
  return alpha * global + (Scalar(1) - alpha) * local;
}

template <typename Scalar>
SimilarityBundle<Scalar> make_bundle(Eigen::MatrixX<Scalar> global,
                                     Eigen::MatrixX<Scalar> local, Scalar alpha) {
  SimilarityBundle<Scalar> bundle;
  bundle.fused = fused_similarity(global, local, alpha);
  bundle.global = std::move(global);
  bundle.local = std::move(local);
  bundle.alpha = alpha;
  return bundle;
}

}  // namespace rrsitr
