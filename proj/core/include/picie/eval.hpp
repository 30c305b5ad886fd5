// Copyright 2026 The picie-cpp Authors. All Rights Reserved.
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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "picie/checkpoint.hpp"
#include "picie/dataio.hpp"
#include "picie/features.hpp"
#include "picie/image_io.hpp"
#include "picie/rng.hpp"
#include "picie/transforms.hpp"

namespace picie {

// n_pred x n_gt pixel counts; rows are predicted clusters.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(int n_pred, int n_gt);
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  int n_pred() const { return n_pred_; }
  int n_gt() const { return n_gt_; }
  std::int64_t at(int pred, int gt) const { return counts_[static_cast<std::size_t>(pred) * n_gt_ + gt]; }
  std::int64_t& at(int pred, int gt) { return counts_[static_cast<std::size_t>(pred) * n_gt_ + gt]; }
  std::int64_t total() const;
  std::int64_t row_sum(int pred) const;
  std::int64_t col_sum(int gt) const;

  // Adds one prediction/ground-truth pair; gt pixels equal to ignore_value
  // are skipped, out-of-range values raise ConfigError.
  void add(const LabelGrid& pred, const LabelGrid& gt, std::int32_t ignore_value);
  void merge(const ConfusionMatrix& other);
  // Keeps only the listed gt columns (all predicted rows).
  ConfusionMatrix columns(const std::vector<int>& gt_classes) const;

 private:
  int n_pred_ = 0;
  int n_gt_ = 0;
  std::vector<std::int64_t> counts_;
};

// pred_to_gt[k] is the gt class matched to cluster k, or -1.
struct Matching {
  std::vector<int> pred_to_gt;

  std::int64_t matched_mass(const ConfusionMatrix& cm) const;
};

struct MetricsReport {
  double accuracy = 0.0;
  double miou = 0.0;
  // IoU per gt class; nullopt when the class has neither gt nor predicted pixels.
  std::vector<std::optional<double>> per_class_iou;
  Matching matching;
  std::int64_t pixels = 0;
  std::map<std::string, MetricsReport> partitions;
};

struct Partition {
  std::string name;
  std::vector<int> classes;
};

// Maximum-weight injective assignment of clusters to classes (rectangular
// matrices are padded with zero-count rows/columns).
Matching hungarian_match(const ConfusionMatrix& cm);

MetricsReport metrics(const ConfusionMatrix& cm, const Matching& matching);

// Restricts the matrix to each partition's gt columns, keeping the global
// matching, and recomputes accuracy and mIoU over those classes.
std::map<std::string, MetricsReport> partition_metrics(const ConfusionMatrix& cm, const Matching& matching,
                                                       const std::vector<Partition>& partitions);

// Parses "name:a-b[,c,...]" specifications.
Partition parse_partition(const std::string& spec);

// Per-image K1 predictions at ground-truth resolution (image resolution when
// a sample has no labels).
std::vector<LabelGrid> predict_labels(const std::vector<ImageSample>& dataset, const Checkpoint& checkpoint);
std::vector<LabelGrid> predict_labels(const std::vector<ImageSample>& dataset, const Extractor& extractor,
                                      const Centroids& centroids);

ConfusionMatrix confusion(const std::vector<LabelGrid>& predictions, const std::vector<ImageSample>& dataset,
                          int n_pred, int n_gt);

// Full evaluation: predictions, confusion, Hungarian matching, metrics and
// partition sub-reports.
MetricsReport evaluate(const std::vector<ImageSample>& dataset, const Checkpoint& checkpoint, int n_classes,
                       const std::vector<Partition>& partitions = {});

struct RobustnessReport {
  MetricsReport clean;
  MetricsReport photometric;
  MetricsReport geometric;
};

// Test-time augmentation: one record per image drawn from `rng`. The
// photometric condition perturbs images only; the geometric condition warps
// images and ground truth with the same parameters.
RobustnessReport robustness_eval(const std::vector<ImageSample>& dataset, const Checkpoint& checkpoint,
                                 int n_classes, Rng& rng, const TransformRanges& ranges = {});

using Color = std::array<std::uint8_t, 3>;
inline constexpr Color kEmptyClusterColor = {0, 0, 0};

std::vector<Color> default_palette(int n_classes);

// Paints every cluster with the palette color of its majority gt class over
// the whole set (ties to the lowest class id; clusters without evaluated
// pixels get kEmptyClusterColor).
std::vector<Rgb8Image> render_majority_vote(const std::vector<LabelGrid>& predictions,
                                            const std::vector<ImageSample>& dataset, int n_pred,
                                            const std::vector<Color>& palette);

struct Neighbor {
  std::string image_id;
  int y = 0;
  int x = 0;
  double distance = 0.0;
};

struct NeighborResult {
  std::vector<Neighbor> neighbors;  // ascending distance
  bool truncated = false;           // fewer than k candidates existed
};

// Exact top-k search over a strided subsample of corpus pixels (lattice
// aligned with the query coordinate). The query pixel itself is excluded.
NeighborResult nearest_neighbors(const std::vector<FeatureMap>& corpus, const std::string& query_id, int y,
                                 int x, int k, int stride = 2);

std::string to_json(const MetricsReport& report, int indent = 2);
std::string to_json(const MetricsReport& clean, const std::optional<RobustnessReport>& robustness,
                    int indent = 2);

}  // namespace picie
