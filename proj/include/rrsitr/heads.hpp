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

// Trainable per-modality affine projection heads. Each head maps both the
// global and the local features of its modality, followed by unit-norm
// renormalization.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "rrsitr/dataset.hpp"
#include "rrsitr/similarity.hpp"

namespace rrsitr {

struct ProjectionHeads {
  Eigen::MatrixXd w_img;  // dim_out x dim_in
  Eigen::VectorXd b_img;
  Eigen::MatrixXd w_txt;
  Eigen::VectorXd b_txt;

  std::size_t dim_in() const { return static_cast<std::size_t>(w_img.cols()); }
  std::size_t dim_out() const { return static_cast<std::size_t>(w_img.rows()); }
  Eigen::Index num_params() const;

  // Identity padded or truncated to dim_out x dim_in, plus N(0, noise_std^2)
  // on every weight; zero biases.
  static ProjectionHeads init(std::size_t dim_in, std::size_t dim_out,
                              double noise_std, std::uint64_t seed);
  static ProjectionHeads zeros_like(const ProjectionHeads& other);

  // Layout: w_img (column-major), b_img, w_txt, b_txt.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  // 1 for weight-matrix entries, 0 for biases (in flatten() order).
  Eigen::VectorXd weight_mask() const;

  bool operator==(const ProjectionHeads& other) const;
};

// Head outputs with the intermediates backprop needs.
struct ProjectedModality {
  Eigen::MatrixXd input;  // rows: global rows first, then local rows
  Eigen::MatrixXd pre;    // input * W^T + b
  Eigen::VectorXd norm;   // ||pre row||
  Eigen::MatrixXd unit;   // pre row / (norm + eps)
  Eigen::Index n_global = 0;

  auto global() const { return unit.topRows(n_global); }
  auto local() const { return unit.bottomRows(unit.rows() - n_global); }
};

struct ProjectedBatch {
  ProjectedModality image;
  ProjectedModality text;
  Eigen::Index d1 = 0;
  Eigen::Index d2 = 0;
};

ProjectedBatch forward(const ProjectionHeads& heads, const PairBatch& batch);

// Sg, Sl and Sf on already-normalized head outputs.
SimilarityBundle<double> projected_similarities(const ProjectedBatch& projected,
                                                double alpha, LocalAggregation agg);

// RRSP: magic "RRSP", u32 version, u32 dim_in, u32 dim_out, then f64
// w_img (row-major), b_img, w_txt (row-major), b_txt.
void write_checkpoint(const ProjectionHeads& heads, const std::filesystem::path& path);
ProjectionHeads read_checkpoint(const std::filesystem::path& path);

}  // namespace rrsitr
