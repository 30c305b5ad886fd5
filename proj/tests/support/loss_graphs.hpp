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

#include <string>
#include <vector>

#include "picie/features.hpp"
#include "picie/losses.hpp"
#include "picie/transforms.hpp"
#include "test_support.hpp"

namespace picie::testing {

// Two augmented views of one random image through a small tiny-backbone
// extractor, with fixed pseudo-labels, centroids and a linear head.
struct TwoViewProblem {
  Extractor extractor;
  std::vector<Tensor> inputs;  // G(P1(x)), P2(x)
  GeometricParams feature_geo;
  LabelGrid y1, y2;
  Centroids c1, c2;
  ClusterWeights w1, w2;
  std::vector<double> head_w;  // k x dim
  std::vector<double> head_b;
  int k = 3;

  explicit TwoViewProblem(std::uint64_t seed, int side = 16, int dim = 16)
      : extractor(ExtractorConfig{BackboneKind::kTiny, dim, 4, std::nullopt}, seed) {
    Rng rng(seed + 1);
    const Tensor image = random_image(side, side, rng);
    TransformRanges ranges;
    ranges.jitter_p = 1.0;
    TransformRecord rec = sample_record(rng, side, ranges);
    rec.geo.crop_factor = 0.5;
    rec.geo.cx = 0.4;
    rec.geo.cy = 0.6;
    rec.geo.flip = true;
    inputs = {apply_geometric(apply_photometric(image, rec.photo1), rec.geo, GridKind::kImage),
              apply_photometric(image, rec.photo2)};
    feature_geo = rec.geo.at_stride(4);
    const int s = side / 4;
    y1 = random_labels(s, s, k, rng);
    y2 = random_labels(s, s, k, rng);
    c1 = random_centroids(k, dim, rng);
    c2 = random_centroids(k, dim, rng);
    w1 = ClusterWeights{{0.7, 1.0, 1.6}};
    w2 = ClusterWeights{{1.2, 0.9, 1.0}};
    head_w.resize(static_cast<std::size_t>(k) * dim);
    for (auto& v : head_w) v = rng.normal();
    head_b = {0.1, -0.2, 0.05};
  }

  // Feature nodes of both views on the common grid of view 1.
  std::pair<int, int> views(ag::Tape& tape, std::span<const int> feats) const {
    const Tensor& raw2 = tape.value(feats[1]);
    const Box box = feature_geo.box(raw2.h, raw2.w);
    const int z2 = tape.l2_normalize(
        tape.resample(feats[1], box, feature_geo.out_side, feature_geo.out_side, feature_geo.flip), 1e-12);
    return {feats[0], z2};
  }

  FeatureLoss within_cross(double within_scale, double cross_scale) const {
    return [this, within_scale, cross_scale](ag::Tape& tape, std::span<const int> feats) {
      const auto [n1, n2] = views(tape, feats);
      const Tensor& z1 = tape.value(n1);
      const Tensor& z2 = tape.value(n2);
      Tensor d1(z1.c, z1.h, z1.w), d2(z2.c, z2.h, z2.w);
      const WithinCross wc =
          within_and_cross(z1, z2, y1, y2, c1, c2, w1, w2, &d1, &d2, {within_scale, cross_scale});
      tape.seed(n1, d1);
      tape.seed(n2, d2);
      return within_scale * wc.within + cross_scale * wc.cross;
    };
  }

  FeatureLoss clust() const {
    return [this](ag::Tape& tape, std::span<const int> feats) {
      const Tensor& z = tape.value(feats[0]);
      Tensor d(z.c, z.h, z.w);
      const double l = l_clust_map(z, y1, c1, w1, &d);
      tape.seed(feats[0], d);
      return l;
    };
  }
  FeatureLoss within() const { return within_cross(1.0, 0.0); }
  FeatureLoss cross() const { return within_cross(0.0, 1.0); }
  FeatureLoss total() const { return within_cross(0.5, 0.5); }

  FeatureLoss parametric() const {
    return [this](ag::Tape& tape, std::span<const int> feats) {
      const Tensor& z = tape.value(feats[0]);
      const std::size_t n = z.plane();
      Tensor scores(k, z.h, z.w);
      for (int l = 0; l < k; ++l)
        for (std::size_t p = 0; p < n; ++p) {
          double s = head_b[l];
          for (int c = 0; c < z.c; ++c) s += head_w[l * z.c + c] * z.data[c * n + p];
          scores.data[l * n + p] = s;
        }
      Tensor ds(k, z.h, z.w);
      const double l = parametric_ce_map(scores, y1, w1, &ds);
      Tensor dz(z.c, z.h, z.w);
      for (int l2 = 0; l2 < k; ++l2)
        for (std::size_t p = 0; p < n; ++p)
          for (int c = 0; c < z.c; ++c) dz.data[c * n + p] += head_w[l2 * z.c + c] * ds.data[l2 * n + p];
      tape.seed(feats[0], dz);
      return l;
    };
  }

  FeatureLoss mse() const {
    return [this](ag::Tape& tape, std::span<const int> feats) {
      const auto [n1, n2] = views(tape, feats);
      const Tensor& z1 = tape.value(n1);
      const Tensor& z2 = tape.value(n2);
      Tensor d1(z1.c, z1.h, z1.w), d2(z2.c, z2.h, z2.w);
      const double l = mse_cross_view(z1, z2, &d1, &d2);
      tape.seed(n1, d1);
      tape.seed(n2, d2);
      return l;
    };
  }
};

}  // namespace picie::testing
