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

#include "rrsitr/heads.hpp"

#include <random>

#include "binary_io.hpp"
#include "rrsitr/errors.hpp"

namespace rrsitr {
namespace {

constexpr char kMagic[5] = "RRSP";
constexpr std::uint32_t kVersion = 1;

ProjectedModality project(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& global, const Eigen::MatrixXd& local) {
  if (global.cols() != w.cols() || local.cols() != w.cols()) {
    throw ConfigError("forward: embedding width " + std::to_string(global.cols()) +
                      " does not match head input width " + std::to_string(w.cols()));
  }
  ProjectedModality out;
  out.n_global = global.rows();
  out.input.resize(global.rows() + local.rows(), global.cols());
  out.input << global, local;
  out.pre = (out.input * w.transpose()).rowwise() + b.transpose();
  out.norm = out.pre.rowwise().norm();
  out.unit.resize(out.pre.rows(), out.pre.cols());
  for (Eigen::Index r = 0; r < out.pre.rows(); ++r) {
    if (!(out.norm[r] > 0.0)) {
      throw NumericError("projection head produced a zero-norm row");
    }
    out.unit.row(r) = out.pre.row(r) / (out.norm[r] + kNormEpsilon);
  }
  return out;
}

}  // namespace

Eigen::Index ProjectionHeads::num_params() const {
  return w_img.size() + b_img.size() + w_txt.size() + b_txt.size();
}

ProjectionHeads ProjectionHeads::init(std::size_t dim_in, std::size_t dim_out,
                                      double noise_std, std::uint64_t seed) {
  if (dim_in < 1 || dim_out < 1) throw ConfigError("head widths must be >= 1");
  const auto rows = static_cast<Eigen::Index>(dim_out);
  const auto cols = static_cast<Eigen::Index>(dim_in);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto make = [&] {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(rows, cols);
    if (noise_std > 0.0) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) w(r, c) += noise_std * normal(rng);
      }
    }
    return w;
  };
  ProjectionHeads h;
  h.w_img = make();
  h.w_txt = make();
  h.b_img = Eigen::VectorXd::Zero(rows);
  h.b_txt = Eigen::VectorXd::Zero(rows);
  return h;
}

ProjectionHeads ProjectionHeads::zeros_like(const ProjectionHeads& other) {
  ProjectionHeads h;
  h.w_img = Eigen::MatrixXd::Zero(other.w_img.rows(), other.w_img.cols());
  h.w_txt = Eigen::MatrixXd::Zero(other.w_txt.rows(), other.w_txt.cols());
  h.b_img = Eigen::VectorXd::Zero(other.b_img.size());
  h.b_txt = Eigen::VectorXd::Zero(other.b_txt.size());
  return h;
}

Eigen::VectorXd ProjectionHeads::flatten() const {
  Eigen::VectorXd flat(num_params());
  flat << w_img.reshaped(), b_img, w_txt.reshaped(), b_txt;
  return flat;
}

void ProjectionHeads::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != num_params()) throw InternalError("unflatten: size mismatch");
  Eigen::Index at = 0;
  const auto take = [&](auto& dst) {
    dst.reshaped() = flat.segment(at, dst.size());
    at += dst.size();
  };
  take(w_img);
  take(b_img);
  take(w_txt);
  take(b_txt);
}

Eigen::VectorXd ProjectionHeads::weight_mask() const {
  Eigen::VectorXd mask(num_params());
  mask << Eigen::VectorXd::Ones(w_img.size()), Eigen::VectorXd::Zero(b_img.size()),
      Eigen::VectorXd::Ones(w_txt.size()), Eigen::VectorXd::Zero(b_txt.size());
  return mask;
}

bool ProjectionHeads::operator==(const ProjectionHeads& other) const {
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w_img, other.w_img) && same(b_img, other.b_img) &&
         same(w_txt, other.w_txt) && same(b_txt, other.b_txt);
}

ProjectedBatch forward(const ProjectionHeads& heads, const PairBatch& batch) {
  ProjectedBatch out;
  out.d1 = static_cast<Eigen::Index>(batch.d1);
  out.d2 = static_cast<Eigen::Index>(batch.d2);
  out.image = project(heads.w_img, heads.b_img, batch.image_global, batch.image_local);
  out.text = project(heads.w_txt, heads.b_txt, batch.text_global, batch.text_local);
  return out;
}

SimilarityBundle<double> projected_similarities(const ProjectedBatch& projected,
                                                double alpha, LocalAggregation agg) {
  Eigen::MatrixXd global = projected.image.global() * projected.text.global().transpose();
  Eigen::MatrixXd local = local_similarity_unit(projected.image.local(),
                                                projected.text.local(), projected.d1,
                                                projected.d2, agg);
  return make_bundle(std::move(global), std::move(local), alpha);
}

void write_checkpoint(const ProjectionHeads& heads, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_magic(kMagic);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(heads.dim_in()));
  w.put(static_cast<std::uint32_t>(heads.dim_out()));
  const auto put_matrix = [&](const Eigen::MatrixXd& m) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    w.put_array(rm.data(), static_cast<std::size_t>(rm.size()));
  };
  put_matrix(heads.w_img);
  w.put_array(heads.b_img.data(), static_cast<std::size_t>(heads.b_img.size()));
  put_matrix(heads.w_txt);
  w.put_array(heads.b_txt.data(), static_cast<std::size_t>(heads.b_txt.size()));
  w.save(path);
}

ProjectionHeads read_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic(kMagic);
  const auto version_offset = r.offset();
  if (const auto v = r.get<std::uint32_t>("version"); v != kVersion) {
    throw FormatError("unsupported RRSP version " + std::to_string(v), version_offset);
  }
  const auto dims_offset = r.offset();
  const auto dim_in = r.get<std::uint32_t>("header.dim_in");
  const auto dim_out = r.get<std::uint32_t>("header.dim_out");
  if (dim_in < 1 || dim_out < 1) throw FormatError("head widths must be >= 1", dims_offset);
  const auto rows = static_cast<Eigen::Index>(dim_out);
  const auto cols = static_cast<Eigen::Index>(dim_in);
  const auto get_matrix = [&](const char* section) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    r.get_array(rm.data(), static_cast<std::size_t>(rm.size()), section);
    return Eigen::MatrixXd(rm);
  };
  const auto get_vector = [&](const char* section) {
    Eigen::VectorXd v(rows);
    r.get_array(v.data(), static_cast<std::size_t>(v.size()), section);
    return v;
  };
  ProjectionHeads h;
  h.w_img = get_matrix("w_img");
  h.b_img = get_vector("b_img");
  h.w_txt = get_matrix("w_txt");
  h.b_txt = get_vector("b_txt");
  if (r.remaining() != 0) throw FormatError("trailing bytes after RRSP payload", r.offset());
  return h;
}

}  // namespace rrsitr
