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

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "picie/checkpoint.hpp"
#include "picie/clustering.hpp"
#include "picie/dataio.hpp"
#include "picie/features.hpp"
#include "picie/losses.hpp"
#include "picie/optimizer.hpp"
#include "picie/transforms.hpp"

namespace picie {

// Alternatives to the cross-view prototype loss, for ablations.
enum class CrossViewMode { kPrototype, kMse };

struct TrainConfig {
  Method method = Method::kPicie;
  int k1 = 27;
  int k2 = 100;  // overclustering head, 0 disables
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 0;
  AdamConfig adam;
  KMeansOptions kmeans;
  TransformRanges transforms;
  CrossViewMode cross_view = CrossViewMode::kPrototype;
  // Cluster only the second view and use its labels and centroids for both.
  bool single_clustering = false;
  bool deterministic = true;

  void validate() const;
};

struct HeadLosses {
  int k = 0;
  double within = 0.0;
  double cross = 0.0;
  double total = 0.0;
};

struct EpochReport {
  int epoch = 0;
  std::vector<HeadLosses> heads;           // K1 first, then K2 when enabled
  double combined = 0.0;                   // balanced sum actually optimized
  std::vector<std::vector<std::int64_t>> histograms;  // per head: view 1, view 2
  double clustering_seconds = 0.0;
  double training_seconds = 0.0;
};

// Drives the alternation between clustering and training for one method.
class Trainer {
 public:
  Trainer(const std::vector<ImageSample>& dataset, TrainConfig config, ExtractorConfig extractor,
          std::uint64_t config_hash = 0);
  // Resumes from a checkpoint; the next epoch is checkpoint.epoch + 1.
  Trainer(const std::vector<ImageSample>& dataset, TrainConfig config, const Checkpoint& checkpoint);

  // One clustering phase followed by one training phase.
  EpochReport run_epoch();
  // Runs the remaining epochs, then fits the evaluation centroids.
  std::vector<EpochReport> run(const std::function<void(const EpochReport&)>& on_epoch = {});
  // K1 centroids over clean features of the current extractor.
  void fit_eval_centroids();

  Checkpoint checkpoint() const;
  const Extractor& extractor() const { return extractor_; }
  Extractor& extractor() { return extractor_; }
  const TrainConfig& config() const { return config_; }
  int epoch() const { return epoch_; }
  // Pseudo-label sets of the last clustering phase (one per head).
  const std::vector<PseudoLabelSet>& pseudo_labels() const { return pseudo_labels_; }
  const std::optional<Centroids>& eval_centroids() const { return eval_centroids_; }

  // Balanced PiCIE objective of one image under fixed pseudo-labels. Adds
  // `scale` times the parameter gradient into `grads` when given.
  double picie_image_loss(std::size_t index, Gradients* grads, double scale,
                          std::vector<HeadLosses>* heads = nullptr) const;

 private:
  EpochReport picie_epoch();
  EpochReport mdc_epoch();
  std::vector<std::size_t> batch_order();

  const std::vector<ImageSample>& dataset_;
  TrainConfig config_;
  Extractor extractor_;
  Adam adam_;
  Rng rng_;
  int epoch_ = 0;
  std::uint64_t config_hash_ = 0;
  std::vector<PseudoLabelSet> pseudo_labels_;
  std::vector<ClusterWeights> weights1_, weights2_;
  std::vector<double> lambdas_;
  std::optional<Centroids> eval_centroids_;
  // Linear 1x1 classifier of the parametric baseline, rebuilt every epoch.
  std::vector<Parameter> head_;
};

// Initial extractor of a run (pretrained weights applied when configured).
Extractor make_extractor(const ExtractorConfig& config, std::uint64_t seed);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochReport> reports;
};

TrainResult train_picie(const std::vector<ImageSample>& dataset, TrainConfig config,
                        const ExtractorConfig& extractor);
TrainResult train_mdc(const std::vector<ImageSample>& dataset, TrainConfig config,
                      const ExtractorConfig& extractor);
// Clusters the features of the freshly initialized extractor once.
TrainResult train_no_train(const std::vector<ImageSample>& dataset, TrainConfig config,
                           const ExtractorConfig& extractor);
// Dispatches on config.method.
TrainResult train(const std::vector<ImageSample>& dataset, const TrainConfig& config,
                  const ExtractorConfig& extractor);

}  // namespace picie
