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
#include <span>
#include <string>

#include <json.hpp>

#include "rrsitr/dataset.hpp"
#include "rrsitr/heads.hpp"
#include "rrsitr/hyper.hpp"
#include "rrsitr/selfpaced.hpp"

namespace rrsitr {

// Percentage of queries (rows of s) whose ground-truth column ranks within the
// top k by descending similarity. Equal scores rank the lower column first.
template <typename Derived>
double recall_at_k(const Eigen::MatrixBase<Derived>& s,
                   std::span<const Eigen::Index> ground_truth, std::size_t k) {
  if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
  if (k > static_cast<std::size_t>(s.cols())) {
    throw ConfigError("recall_at_k: k=" + std::to_string(k) + " exceeds gallery size " +
                      std::to_string(s.cols()));
  }
  if (ground_truth.size() != static_cast<std::size_t>(s.rows())) {
    throw ConfigError("recall_at_k: one ground-truth index per query required");
  }
  if (s.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index q = 0; q < s.rows(); ++q) {
    const Eigen::Index gt = ground_truth[static_cast<std::size_t>(q)];
    if (gt < 0 || gt >= s.cols()) throw ConfigError("recall_at_k: ground truth out of range");
    const auto target = s(q, gt);
    std::size_t ahead = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (s(q, j) > target || (s(q, j) == target && j < gt)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(s.rows());
}

struct RetrievalReport {
  double i2t_r1 = 0, i2t_r5 = 0, i2t_r10 = 0;
  double t2i_r1 = 0, t2i_r5 = 0, t2i_r10 = 0;
  double mr = 0;
};

// Both directions of a square image x text similarity matrix with matched
// pairs on the diagonal.
RetrievalReport retrieval_report(const Eigen::MatrixXd& fused);

// Projects the clean test split, fuses with hyper.alpha (or 1.0 when
// use_local is false) and reports R@{1,5,10} both ways.
RetrievalReport evaluate(const ProjectionHeads& heads, const Dataset& test,
                         const Hyper& hyper, bool use_local = true);

struct DetectionReport {
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Fraction of y=1 in clean / ambiguous, y=0 in noisy. 1 for empty buckets.
  double purity_clean = 1.0;
  double purity_ambiguous = 1.0;
  double purity_noisy = 1.0;
  std::size_t predicted_noisy = 0;
  std::size_t true_noisy = 0;
  bool has_ground_truth_noise = false;
  double mean_weight_y1 = 0.0;
  double mean_weight_y0 = 0.0;
};

// Noisy-bucket membership as a positive prediction of y=0. An empty
// prediction set has precision 1 by convention.
DetectionReport detection_metrics(std::span<const Bucket> buckets,
                                  std::span<const std::uint8_t> y,
                                  std::span<const double> weights = {});
DetectionReport detection_metrics(std::span<const PairTrace> trace);

void to_json(nlohmann::json& j, const RetrievalReport& r);
void to_json(nlohmann::json& j, const DetectionReport& r);

std::string retrieval_csv_header();
std::string retrieval_csv_row(const std::string& label, const RetrievalReport& r);

}  // namespace rrsitr
