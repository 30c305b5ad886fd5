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
#include <span>
#include <vector>

#include "picie/centroids.hpp"
#include "picie/tensor.hpp"

namespace picie {

struct ClusterWeights {
  std::vector<double> w;

  static ClusterWeights uniform(int k) { return {std::vector<double>(k, 1.0)}; }
};

struct BalanceCoefficients {
  double k1 = 1.0;
  double k2 = 0.0;
};

// 1 - a.b for unit vectors; throws NumericalError on non-finite input.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Weighted prototype cross-entropy of one pixel embedding:
//   w_y * -log softmax_y(-d(z, mu_l)).
// When `dz` is non-empty, `scale` times dL/dz is added into it. Centroids
// are constants.
double l_clust(std::span<const double> z, int y, const Centroids& c, const ClusterWeights& w,
               std::span<double> dz = {}, double scale = 1.0);

// Mean of l_clust over every pixel of a D x H x W map. When `dz` is given,
// `scale` times the gradient of the mean is accumulated into it.
double l_clust_map(const Tensor& z, const LabelGrid& y, const Centroids& c, const ClusterWeights& w,
                   Tensor* dz = nullptr, double scale = 1.0);

struct WithinCross {
  double within = 0.0;
  double cross = 0.0;
};

// Gradient scales applied to the within and cross terms when dz1/dz2 are set.
struct WithinCrossScales {
  double within = 1.0;
  double cross = 1.0;
};

// within = mean_p [l(z1, y1; c1) + l(z2, y2; c2)]
// cross  = mean_p [l(z1, y2; c2) + l(z2, y1; c1)]
WithinCross within_and_cross(const Tensor& z1, const Tensor& z2, const LabelGrid& y1,
                             const LabelGrid& y2, const Centroids& c1, const Centroids& c2,
                             const ClusterWeights& w1, const ClusterWeights& w2,
                             Tensor* dz1 = nullptr, Tensor* dz2 = nullptr,
                             WithinCrossScales scales = {});

// (within + cross) / 2.
double total_loss(double within, double cross);

// lambda_K1 = log K2 / (log K1 + log K2), lambda_K2 = 1 - lambda_K1.
BalanceCoefficients balance(int k1, int k2);

// w_k = N / (K * max(n_k, 1)).
ClusterWeights cluster_size_weights(std::span<const std::int64_t> counts, std::int64_t n_total);

// Softmax cross-entropy of classifier logits against label y.
double parametric_ce(std::span<const double> scores, int y, std::span<double> dscores = {},
                     double scale = 1.0, double weight = 1.0);

// Mean weighted cross-entropy over a K x H x W score map.
double parametric_ce_map(const Tensor& scores, const LabelGrid& y, const ClusterWeights& w,
                         Tensor* dscores = nullptr, double scale = 1.0);

// Mean squared distance between corresponding pixel vectors.
double mse_cross_view(const Tensor& z1, const Tensor& z2, Tensor* dz1 = nullptr,
                      Tensor* dz2 = nullptr, double scale = 1.0);

}  // namespace picie
