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

#include "rrsitr/evaluation.hpp"

#include <numeric>
#include <sstream>
#include <vector>

#include "rrsitr/errors.hpp"

namespace rrsitr {

RetrievalReport retrieval_report(const Eigen::MatrixXd& fused) {
  if (fused.rows() != fused.cols()) {
    throw ConfigError("retrieval_report: expects a square similarity matrix");
  }
  std::vector<Eigen::Index> gt(static_cast<std::size_t>(fused.rows()));
  std::iota(gt.begin(), gt.end(), Eigen::Index{0});
  const Eigen::MatrixXd transposed = fused.transpose();
  RetrievalReport r;
  r.i2t_r1 = recall_at_k(fused, gt, 1);
  r.i2t_r5 = recall_at_k(fused, gt, 5);
  r.i2t_r10 = recall_at_k(fused, gt, 10);
  r.t2i_r1 = recall_at_k(transposed, gt, 1);
  r.t2i_r5 = recall_at_k(transposed, gt, 5);
  r.t2i_r10 = recall_at_k(transposed, gt, 10);
  r.mr = (r.i2t_r1 + r.i2t_r5 + r.i2t_r10 + r.t2i_r1 + r.t2i_r5 + r.t2i_r10) / 6.0;
  return r;
}

RetrievalReport evaluate(const ProjectionHeads& heads, const Dataset& test,
                         const Hyper& hyper, bool use_local) {
  if (test.n_noisy() != 0) {
    throw DataError("evaluation split contains " + std::to_string(test.n_noisy()) +
                    " pairs with y=0; evaluation requires clean pairs");
  }
  std::vector<std::size_t> rows(test.n_pairs());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto projected = forward(heads, gather_batch(test, rows));
  const double alpha = use_local ? hyper.alpha : 1.0;
  const auto sims = projected_similarities(projected, alpha, hyper.local_aggregation);
  return retrieval_report(sims.fused);
}

DetectionReport detection_metrics(std::span<const Bucket> buckets,
                                  std::span<const std::uint8_t> y,
                                  std::span<const double> weights) {
  if (buckets.size() != y.size() || (!weights.empty() && weights.size() != y.size())) {
    throw InternalError("detection_metrics: bucket, label and weight lengths differ");
  }
  DetectionReport r;
  std::size_t tp = 0;
  std::size_t count[3] = {0, 0, 0};
  std::size_t pure[3] = {0, 0, 0};
  double weight_sum[2] = {0, 0};
  std::size_t label_count[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto bucket = static_cast<std::size_t>(buckets[i]);
    const bool noisy_label = y[i] == 0;
    ++count[bucket];
    if (buckets[i] == Bucket::kNoisy) {
      pure[bucket] += noisy_label ? 1 : 0;
      tp += noisy_label ? 1 : 0;
    } else {
      pure[bucket] += noisy_label ? 0 : 1;
    }
    ++label_count[y[i]];
    if (!weights.empty()) weight_sum[y[i]] += weights[i];
  }
  r.predicted_noisy = count[2];
  r.true_noisy = label_count[0];
  r.has_ground_truth_noise = r.true_noisy > 0;
  r.precision = r.predicted_noisy == 0
                    ? 1.0
                    : static_cast<double>(tp) / static_cast<double>(r.predicted_noisy);
  r.recall = r.true_noisy == 0 ? 0.0
                               : static_cast<double>(tp) / static_cast<double>(r.true_noisy);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  const auto purity = [&](std::size_t b) {
    return count[b] == 0 ? 1.0 : static_cast<double>(pure[b]) / static_cast<double>(count[b]);
  };
  r.purity_clean = purity(0);
  r.purity_ambiguous = purity(1);
  r.purity_noisy = purity(2);
  if (!weights.empty()) {
    if (label_count[1] > 0) r.mean_weight_y1 = weight_sum[1] / static_cast<double>(label_count[1]);
    if (label_count[0] > 0) r.mean_weight_y0 = weight_sum[0] / static_cast<double>(label_count[0]);
  }
  return r;
}

DetectionReport detection_metrics(std::span<const PairTrace> trace) {
  std::vector<Bucket> buckets;
  std::vector<std::uint8_t> y;
  std::vector<double> w;
  for (const auto& row : trace) {
    buckets.push_back(row.bucket);
    y.push_back(row.y);
    w.push_back(row.weight);
  }
  return detection_metrics(buckets, y, w);
}

void to_json(nlohmann::json& j, const RetrievalReport& r) {
  j = nlohmann::json{{"i2t_r1", r.i2t_r1}, {"i2t_r5", r.i2t_r5}, {"i2t_r10", r.i2t_r10},
                     {"t2i_r1", r.t2i_r1}, {"t2i_r5", r.t2i_r5}, {"t2i_r10", r.t2i_r10},
                     {"mr", r.mr}};
}

void to_json(nlohmann::json& j, const DetectionReport& r) {
  j = nlohmann::json{{"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"purity_clean", r.purity_clean},
                     {"purity_ambiguous", r.purity_ambiguous},
                     {"purity_noisy", r.purity_noisy},
                     {"predicted_noisy", r.predicted_noisy},
                     {"true_noisy", r.true_noisy},
                     {"has_ground_truth_noise", r.has_ground_truth_noise},
                     {"mean_weight_y1", r.mean_weight_y1},
                     {"mean_weight_y0", r.mean_weight_y0}};
  if (!r.has_ground_truth_noise) j["note"] = "no ground-truth noise";
}

std::string retrieval_csv_header() {
  return "label,i2t_r1,i2t_r5,i2t_r10,t2i_r1,t2i_r5,t2i_r10,mr";
}

std::string retrieval_csv_row(const std::string& label, const RetrievalReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << label << ',' << r.i2t_r1 << ',' << r.i2t_r5 << ',' << r.i2t_r10 << ','
      << r.t2i_r1 << ',' << r.t2i_r5 << ',' << r.t2i_r10 << ',' << r.mr;
  return out.str();
}

}  // namespace rrsitr
