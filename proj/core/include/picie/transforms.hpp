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
#include <span>

#include "picie/grid_ops.hpp"
#include "picie/rng.hpp"
#include "picie/tensor.hpp"

namespace picie {

// Sampling ranges and activation probabilities for the augmentation family.
struct TransformRanges {
  double jitter_p = 0.8;
  double brightness = 0.3;
  double contrast = 0.3;
  double saturation = 0.3;
  double hue = 0.1;
  double grayscale_p = 0.2;
  double blur_p = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double flip_p = 0.5;
  double crop_min = 0.5;
  double crop_max = 1.0;
};

struct PhotometricParams {
  bool jitter_active = false;
  double brightness = 1.0;  // multiplicative factors, 1 = no-op
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;         // hue rotation in turns
  bool grayscale_active = false;
  bool blur_active = false;
  double blur_sigma = 0.1;

  static constexpr std::size_t kFlatSize = 8;
  bool operator==(const PhotometricParams&) const = default;
};

struct GeometricParams {
  bool flip = false;
  double crop_factor = 1.0;  // crop side = crop_factor * min(H, W)
  double cx = 0.5;           // normalized crop center
  double cy = 0.5;
  int out_side = 0;          // image-level output side

  static constexpr std::size_t kFlatSize = 5;
  bool operator==(const GeometricParams&) const = default;

  // Normalized crop box on an h x w grid.
  Box box(int h, int w) const;
  // Same transform targeting a grid downsampled by `stride`.
  GeometricParams at_stride(int stride) const;
};

// One geometric transform shared by both views, one photometric per view.
struct TransformRecord {
  PhotometricParams photo1;
  PhotometricParams photo2;
  GeometricParams geo;

  // Flat layout:
  //   [0..7]   photo1: jitter_active, brightness, contrast, saturation, hue,
  //            grayscale_active, blur_active, blur_sigma
  //   [8..15]  photo2: same order
  //   [16..20] geo: flip, crop_factor, cx, cy, out_side
  static constexpr std::size_t kFlatSize =
      2 * PhotometricParams::kFlatSize + GeometricParams::kFlatSize;
  std::array<double, kFlatSize> to_flat() const;
  static TransformRecord from_flat(std::span<const double> flat);

  static TransformRecord identity(int out_side);
  bool operator==(const TransformRecord&) const = default;
};

PhotometricParams sample_photometric(Rng& rng, const TransformRanges& ranges = {});
GeometricParams sample_geometric(Rng& rng, int out_side, const TransformRanges& ranges = {});
TransformRecord sample_record(Rng& rng, int out_side, const TransformRanges& ranges = {});

// Color jitter (brightness, contrast, saturation, hue), then grayscale, then
// Gaussian blur. Output clipped to [0, 1].
Tensor apply_photometric(const Tensor& image, const PhotometricParams& p);

enum class GridKind { kImage, kLabels, kFeatures };

// Crops the square box of side crop_factor * min(H, W), resizes it to
// `out_side` and mirrors horizontally if flagged. Feature grids are
// re-normalized per pixel. Pass out_side <= 0 to use g.out_side.
Tensor apply_geometric(const Tensor& grid, const GeometricParams& g, GridKind kind,
                       int out_side = 0);
LabelGrid apply_geometric(const LabelGrid& grid, const GeometricParams& g, int out_side = 0);

// Normalized Gaussian kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

}  // namespace picie
