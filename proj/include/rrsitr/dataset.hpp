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

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rrsitr {

// Row-major float storage: one embedding per row, so a block is a contiguous
// run of floats in file order.
using EmbeddingBlock =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Paired image/text embeddings with correspondence labels (1:1 pairing).
//
// Local features of pair i occupy rows [i*d1, (i+1)*d1) of image_local and
// rows [i*d2, (i+1)*d2) of text_local.
struct Dataset {
  std::size_t dim = 0;
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  EmbeddingBlock image_global;  // n x dim
  EmbeddingBlock image_local;   // (n*d1) x dim
  EmbeddingBlock text_global;   // n x dim
  EmbeddingBlock text_local;    // (n*d2) x dim
  std::vector<std::uint8_t> y;
  std::optional<std::vector<std::uint32_t>> class_id;

  std::size_t n_pairs() const { return y.size(); }
  std::size_t n_noisy() const;

  // Throws ConfigError on shape violations, NumericError on non-finite rows.
  void validate() const;

  // Copies the given rows (in the given order) into a new dataset.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset& other) const;
};

struct SyntheticConfig {
  std::size_t n_pairs = 1000;
  std::size_t n_classes = 20;
  std::size_t dim = 32;
  std::size_t d1 = 8;
  std::size_t d2 = 8;
  // Radius of a pair's instance center around its class center.
  double intra_class_spread = 0.5;
  // Radius of each modality's copy around the instance center. Negative means
  // "same as intra_class_spread".
  double modality_noise = -1.0;
  // Per-modality nuisance subspace: every embedding receives a random
  // component of this scale inside a fixed rank-`nuisance_rank` subspace
  // that carries no pairing information.
  std::size_t nuisance_rank = 4;
  double nuisance_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Class centers -> instance centers -> per-modality noisy copies. Every row is
// unit-norm. Deterministic for a fixed config.
Dataset generate_synthetic(const SyntheticConfig& config);

struct NoiseSpec {
  double rho = 0.0;
  std::uint64_t seed = 0;
};

// Shuffles the text side (global + local) of a round(rho*n) subset of rows
// among themselves with a derangement and marks those rows y=0. Rejects an
// already-noised dataset.
Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec);

// Pair-batch with embeddings promoted to double for training.
struct PairBatch {
  std::vector<std::size_t> indices;
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  Eigen::MatrixXd image_global;  // b x dim
  Eigen::MatrixXd image_local;   // (b*d1) x dim
  Eigen::MatrixXd text_global;   // b x dim
  Eigen::MatrixXd text_local;    // (b*d2) x dim
  std::vector<std::uint8_t> y;

  std::size_t size() const { return indices.size(); }
};

PairBatch gather_batch(const Dataset& dataset,
                       std::span<const std::size_t> indices);

// Shuffled index chunks of batch_size; a trailing chunk with fewer than two
// rows is dropped.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n_pairs,
                                                    std::size_t batch_size,
                                                    std::uint64_t epoch_seed);

std::vector<PairBatch> batch_iter(const Dataset& dataset,
                                  std::size_t batch_size,
                                  std::uint64_t epoch_seed);

// RRSE little-endian container; see README for the layout.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace rrsitr
