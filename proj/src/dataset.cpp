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

#include "rrsitr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rrsitr/errors.hpp"

namespace rrsitr {
namespace {

using Rng = std::mt19937_64;

Eigen::VectorXd gaussian(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw NumericError("synthetic generator produced a zero row");
  return v / n;
}

// Isotropic perturbation whose expected norm is `scale`.
Eigen::VectorXd jitter(Rng& rng, std::size_t dim, double scale) {
  return gaussian(rng, dim) * (scale / std::sqrt(static_cast<double>(dim)));
}

void copy_rows(const EmbeddingBlock& src, std::size_t src_row,
               EmbeddingBlock& dst, std::size_t dst_row, std::size_t count) {
  dst.middleRows(static_cast<Eigen::Index>(dst_row),
                 static_cast<Eigen::Index>(count)) =
      src.middleRows(static_cast<Eigen::Index>(src_row),
                     static_cast<Eigen::Index>(count));
}

}  // namespace

std::size_t Dataset::n_noisy() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 0));
}

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(n_pairs());
  if (dim < 2) throw ConfigError("dataset invariant violated: dim >= 2");
  if (d1 < 1) throw ConfigError("dataset invariant violated: d1 >= 1");
  if (d2 < 1) throw ConfigError("dataset invariant violated: d2 >= 1");
  const auto cols = static_cast<Eigen::Index>(dim);
  const auto check = [&](const EmbeddingBlock& block, Eigen::Index rows,
                         const char* name) {
    if (block.rows() != rows || block.cols() != cols) {
      throw ConfigError(std::string("dataset block '") + name +
                        "' has shape " + std::to_string(block.rows()) + "x" +
                        std::to_string(block.cols()) + ", expected " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!block.allFinite()) {
      throw NumericError(std::string("dataset block '") + name +
                         "' contains non-finite values");
    }
  };
  check(image_global, n, "image_global");
  check(image_local, n * static_cast<Eigen::Index>(d1), "image_local");
  check(text_global, n, "text_global");
  check(text_local, n * static_cast<Eigen::Index>(d2), "text_local");
  for (auto label : y) {
    if (label > 1) throw ConfigError("correspondence labels must be 0 or 1");
  }
  if (class_id && class_id->size() != n_pairs()) {
    throw ConfigError("class_id length does not match n_pairs");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.d1 = d1;
  out.d2 = d2;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto cols = static_cast<Eigen::Index>(dim);
  out.image_global.resize(m, cols);
  out.text_global.resize(m, cols);
  out.image_local.resize(m * static_cast<Eigen::Index>(d1), cols);
  out.text_local.resize(m * static_cast<Eigen::Index>(d2), cols);
  out.y.reserve(rows.size());
  if (class_id) out.class_id.emplace().reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    if (r >= n_pairs()) throw ConfigError("subset row index out of range");
    copy_rows(image_global, r, out.image_global, k, 1);
    copy_rows(text_global, r, out.text_global, k, 1);
    copy_rows(image_local, r * d1, out.image_local, k * d1, d1);
    copy_rows(text_local, r * d2, out.text_local, k * d2, d2);
    out.y.push_back(y[r]);
    if (class_id) out.class_id->push_back((*class_id)[r]);
  }
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  return dim == other.dim && d1 == other.d1 && d2 == other.d2 &&
         y == other.y && class_id == other.class_id &&
         image_global == other.image_global &&
         image_local == other.image_local &&
         text_global == other.text_global && text_local == other.text_local;
}

void SyntheticConfig::validate() const {
  if (n_pairs < 2) throw ConfigError("synthetic config: n_pairs >= 2");
  if (n_classes < 2) throw ConfigError("synthetic config: n_classes >= 2");
  if (dim < 2) throw ConfigError("synthetic config: dim >= 2");
  if (d1 < 1) throw ConfigError("synthetic config: d1 >= 1");
  if (d2 < 1) throw ConfigError("synthetic config: d2 >= 1");
  if (!(intra_class_spread > 0.0) || !std::isfinite(intra_class_spread)) {
    throw ConfigError("synthetic config: intra_class_spread > 0");
  }
  if (!std::isfinite(modality_noise)) {
    throw ConfigError("synthetic config: modality_noise must be finite");
  }
  if (nuisance_scale < 0.0 || !std::isfinite(nuisance_scale)) {
    throw ConfigError("synthetic config: nuisance_scale >= 0");
  }
  if (nuisance_rank > dim) {
    throw ConfigError("synthetic config: nuisance_rank <= dim");
  }
}

Dataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t dim = config.dim;
  const std::size_t parts = std::max(config.d1, config.d2);
  const double modality_noise = config.modality_noise < 0.0
                                    ? config.intra_class_spread
                                    : config.modality_noise;
  constexpr double kPartSpread = 0.75;

  std::vector<Eigen::VectorXd> centers;
  std::vector<std::vector<Eigen::VectorXd>> part_offsets;
  for (std::size_t k = 0; k < config.n_classes; ++k) {
    centers.push_back(unit(gaussian(rng, dim)));
    auto& offsets = part_offsets.emplace_back();
    for (std::size_t p = 0; p < parts; ++p) {
      offsets.push_back(jitter(rng, dim, kPartSpread));
    }
  }

  // Nuisance bases, one per modality: rank x dim.
  const auto rank = static_cast<Eigen::Index>(config.nuisance_rank);
  Eigen::MatrixXd nuisance_img(rank, static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd nuisance_txt(rank, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < rank; ++r) {
    nuisance_img.row(r) = unit(gaussian(rng, dim)).transpose();
    nuisance_txt.row(r) = unit(gaussian(rng, dim)).transpose();
  }
  const auto nuisance = [&](const Eigen::MatrixXd& basis) -> Eigen::VectorXd {
    if (rank == 0 || config.nuisance_scale == 0.0) {
      return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    }
    const Eigen::VectorXd coeff =
        gaussian(rng, config.nuisance_rank) *
        (config.nuisance_scale / std::sqrt(static_cast<double>(rank)));
    return basis.transpose() * coeff;
  };

  const std::size_t n = config.n_pairs;
  Dataset out;
  out.dim = dim;
  out.d1 = config.d1;
  out.d2 = config.d2;
  const auto cols = static_cast<Eigen::Index>(dim);
  out.image_global.resize(static_cast<Eigen::Index>(n), cols);
  out.text_global.resize(static_cast<Eigen::Index>(n), cols);
  out.image_local.resize(static_cast<Eigen::Index>(n * config.d1), cols);
  out.text_local.resize(static_cast<Eigen::Index>(n * config.d2), cols);
  out.y.assign(n, 1);
  out.class_id.emplace(n, 0);

  std::uniform_int_distribution<std::size_t> pick_class(0,
                                                        config.n_classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick_class(rng);
    (*out.class_id)[i] = static_cast<std::uint32_t>(k);
    const Eigen::VectorXd instance =
        unit(centers[k] + jitter(rng, dim, config.intra_class_spread));
    const auto row = static_cast<Eigen::Index>(i);

    out.image_global.row(row) =
        unit(instance + jitter(rng, dim, modality_noise) + nuisance(nuisance_img))
            .cast<float>()
            .transpose();
    out.text_global.row(row) =
        unit(instance + jitter(rng, dim, modality_noise) + nuisance(nuisance_txt))
            .cast<float>()
            .transpose();

    std::vector<Eigen::VectorXd> sub_centers;
    for (std::size_t p = 0; p < parts; ++p) {
      sub_centers.push_back(unit(instance + part_offsets[k][p]));
    }
    for (std::size_t p = 0; p < config.d1; ++p) {
      out.image_local.row(static_cast<Eigen::Index>(i * config.d1 + p)) =
          unit(sub_centers[p] + jitter(rng, dim, modality_noise) +
               nuisance(nuisance_img))
              .cast<float>()
              .transpose();
    }
    for (std::size_t q = 0; q < config.d2; ++q) {
      out.text_local.row(static_cast<Eigen::Index>(i * config.d2 + q)) =
          unit(sub_centers[q] + jitter(rng, dim, modality_noise) +
               nuisance(nuisance_txt))
              .cast<float>()
              .transpose();
    }
  }
  return out;
}

Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec) {
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) {
    throw ConfigError("noise rate rho must lie in [0, 1], got " +
                      std::to_string(spec.rho));
  }
  if (clean.n_noisy() != 0) {
    throw DataError("dataset already carries noisy labels; refusing to "
                    "inject noise twice");
  }
  const std::size_t n = clean.n_pairs();
  const auto count = static_cast<std::size_t>(
      std::llround(spec.rho * static_cast<double>(n)));
  Dataset out = clean;
  if (count == 0) return out;

  Rng rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> chosen(order.begin(),
                                  order.begin() + static_cast<long>(count));
  std::sort(chosen.begin(), chosen.end());

  // Sattolo's algorithm: a uniformly random single cycle, hence no fixed
  // points whenever count >= 2.
  std::vector<std::size_t> source = chosen;
  for (std::size_t i = count - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(source[i], source[pick(rng)]);
  }
  // A single pair cannot be cycled; it borrows another pair's text instead.
  if (count == 1 && n >= 2) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 2);
    const std::size_t other = pick(rng);
    source[0] = other < chosen[0] ? other : other + 1;
  }

  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t dst = chosen[k];
    const std::size_t src = source[k];
    copy_rows(clean.text_global, src, out.text_global, dst, 1);
    copy_rows(clean.text_local, src * clean.d2, out.text_local,
              dst * clean.d2, clean.d2);
    out.y[dst] = 0;
  }
  return out;
}

PairBatch gather_batch(const Dataset& dataset,
                       std::span<const std::size_t> indices) {
  PairBatch batch;
  batch.indices.assign(indices.begin(), indices.end());
  batch.d1 = dataset.d1;
  batch.d2 = dataset.d2;
  const auto b = static_cast<Eigen::Index>(indices.size());
  const auto d1 = static_cast<Eigen::Index>(dataset.d1);
  const auto d2 = static_cast<Eigen::Index>(dataset.d2);
  const auto cols = static_cast<Eigen::Index>(dataset.dim);
  batch.image_global.resize(b, cols);
  batch.text_global.resize(b, cols);
  batch.image_local.resize(b * d1, cols);
  batch.text_local.resize(b * d2, cols);
  batch.y.reserve(indices.size());
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto r = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)]);
    if (r >= static_cast<Eigen::Index>(dataset.n_pairs())) {
      throw ConfigError("batch index out of range");
    }
    batch.image_global.row(k) = dataset.image_global.row(r).cast<double>();
    batch.text_global.row(k) = dataset.text_global.row(r).cast<double>();
    batch.image_local.middleRows(k * d1, d1) =
        dataset.image_local.middleRows(r * d1, d1).cast<double>();
    batch.text_local.middleRows(k * d2, d2) =
        dataset.text_local.middleRows(r * d2, d2).cast<double>();
    batch.y.push_back(dataset.y[static_cast<std::size_t>(r)]);
  }
  return batch;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n_pairs,
                                                    std::size_t batch_size,
                                                    std::uint64_t epoch_seed) {
  if (batch_size < 2) {
    throw ConfigError("batch_size must be >= 2, got " +
                      std::to_string(batch_size));
  }
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n_pairs; start += batch_size) {
    const std::size_t stop = std::min(n_pairs, start + batch_size);
    if (stop - start < 2) break;
    out.emplace_back(order.begin() + static_cast<long>(start),
                     order.begin() + static_cast<long>(stop));
  }
  return out;
}

std::vector<PairBatch> batch_iter(const Dataset& dataset,
                                  std::size_t batch_size,
                                  std::uint64_t epoch_seed) {
  std::vector<PairBatch> out;
  for (const auto& idx :
       batch_indices(dataset.n_pairs(), batch_size, epoch_seed)) {
    out.push_back(gather_batch(dataset, idx));
  }
  return out;
}

}  // namespace rrsitr
