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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "picie/binary_io.hpp"
#include "picie/centroids.hpp"
#include "picie/dataio.hpp"
#include "picie/features.hpp"
#include "picie/rng.hpp"
#include "picie/tensor.hpp"
#include "picie/transforms.hpp"

namespace picie {

// Row-major N x D matrix of pixel embeddings.
struct PixelRows {
  int dim = 0;
  std::vector<double> data;

  std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
  void append(const Tensor& feature_map);
};

struct KMeansOptions {
  int init_batches = 50;
  int batch_size = 128;
  int update_period = 20;  // mini-batch iterations between centroid refreshes
  int passes = 1;          // mini-batch sweeps over the data after init
  int init_iterations = 30;
  int init_restarts = 3;

  void validate() const;
  // Shrinks init_batches and batch_size together when fewer than
  // init_batches * batch_size vectors are available.
  KMeansOptions scaled_to(std::size_t n_vectors) const;
};

struct KMeansState {
  Centroids centroids;
  std::vector<double> running;        // K x D unnormalized running means
  std::vector<std::int64_t> counts;   // assignments since init
  std::vector<std::int64_t> window;   // assignments since the last refresh
  std::int64_t iteration = 0;
  int update_period = 20;
  Rng rng;
};

// Nearest centroid by cosine distance, ties to the lowest index.
int nearest_centroid(std::span<const double> z, const Centroids& c, double* distance = nullptr);
LabelGrid assign(const Tensor& features, const Centroids& c);
inline LabelGrid assign(const FeatureMap& f, const Centroids& c) { return assign(f.values, c); }
std::vector<int> assign_rows(const PixelRows& rows, const Centroids& c);

// Sum over rows of the cosine distance to the nearest centroid.
double kmeans_objective(const PixelRows& rows, const Centroids& c);

// Fits initial centroids on the first init_batches * batch_size rows (in the
// given order) with k-means++ seeding and spherical Lloyd iterations.
KMeansState init_centroids(const PixelRows& rows, int k, Rng rng, const KMeansOptions& options = {});

// Assigns the batch, folds it into the running means, and refreshes the
// centroids every update_period calls. Clusters that received no
// assignment in the window are re-seeded from a member of the largest one.
void minibatch_update(KMeansState& state, const PixelRows& batch);

// Shuffles, initializes and runs the configured mini-batch passes.
KMeansState fit_minibatch(const PixelRows& rows, int k, Rng rng, const KMeansOptions& options = {});

struct ClusteringResult {
  Centroids centroids;
  std::vector<LabelGrid> labels;  // one per input map
};

// Clusters every pixel of `maps` and labels them with the final centroids.
ClusteringResult cluster_feature_maps(const std::vector<Tensor>& maps, int k, Rng rng,
                                      const KMeansOptions& options = {});

struct PseudoLabelEntry {
  std::string id;
  LabelGrid view1;
  LabelGrid view2;
  TransformRecord record;
};

struct PseudoLabelSet {
  std::vector<PseudoLabelEntry> entries;
  Centroids centroids1;
  Centroids centroids2;
  int epoch = 0;

  int k() const { return centroids1.k; }
  // Per-cluster pixel counts of view 1 or 2.
  std::vector<std::int64_t> counts(int view) const;
};

struct TwoViewFeatures {
  std::vector<Tensor> view1;  // extract(G(P1(x)))
  std::vector<Tensor> view2;  // G(extract(P2(x)))
};

// Computes both views for every sample under its transform record.
TwoViewFeatures two_view_features(const std::vector<ImageSample>& dataset, const Extractor& extractor,
                                  const std::vector<TransformRecord>& records);

// One clustering pass per entry of `ks` over the same two-view features.
// Records are sampled from `rng` unless `records` is given (replay).
std::vector<PseudoLabelSet> cluster_two_views(const std::vector<ImageSample>& dataset,
                                              const Extractor& extractor, std::span<const int> ks,
                                              Rng& rng, const KMeansOptions& options = {},
                                              const std::vector<TransformRecord>* records = nullptr,
                                              const TransformRanges& ranges = {});

void save_pseudo_labels(const std::filesystem::path& path, const PseudoLabelSet& set);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path);

void write_centroids(BinaryWriter& w, const Centroids& c);
Centroids read_centroids(BinaryReader& r);

}  // namespace picie
