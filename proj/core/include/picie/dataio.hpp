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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "picie/tensor.hpp"

namespace picie {

inline constexpr std::int32_t kDefaultIgnoreValue = 255;

struct ImageSample {
  std::string id;
  Tensor image;                     // 3 x H x W, values in [0, 1]
  std::optional<LabelGrid> labels;  // ground truth, evaluation only
  std::int32_t ignore_value = kDefaultIgnoreValue;
};

// Directory dataset: <root>/<split>/images/<stem>.{png,ppm,pgm} with optional
// label maps at <root>/<split>/labels/<stem>.{png,pgm}.
struct DatasetManifest {
  std::filesystem::path root;
  std::string split = "train";
  int resolution = 320;
  int n_classes = 27;
  std::optional<std::map<std::int32_t, std::int32_t>> label_remap;
  std::int32_t ignore_value = kDefaultIgnoreValue;
};

struct FileError {
  std::string id;
  std::string message;
};

struct LoadResult {
  std::vector<ImageSample> samples;  // sorted by id
  std::vector<FileError> errors;     // files skipped because they were unreadable
};

// Resizes the shorter side to `resolution` (bilinear for images, nearest for
// labels), center-crops to resolution x resolution, then remaps labels.
// Image/label size mismatch aborts the whole load with DataError.
LoadResult load_and_preprocess(const DatasetManifest& manifest);

ImageSample preprocess(ImageSample sample, int resolution);
LabelGrid remap_labels(const LabelGrid& labels, const DatasetManifest& manifest);

// Parses "<original> <merged>" lines ('#' comments allowed).
std::map<std::int32_t, std::int32_t> read_remap_table(const std::filesystem::path& path);

enum class ShapeKind { kRectangle, kDisk, kStripeBand };
enum class TextureKind { kHorizontalStripes, kVerticalStripes, kChecker, kDots, kDiagonal, kFlat };

// Appearance of one synthetic class: a luminance texture plus a base color.
struct ClassStyle {
  ShapeKind shape;
  TextureKind texture;
  double base_rgb[3];
};

const std::vector<ClassStyle>& synthetic_vocabulary();

struct SyntheticSpec {
  int n_images = 200;
  int side = 64;
  int n_classes = 4;
  int min_objects = 2;
  int max_objects = 3;
  int texture_period = 4;  // pixels; even
  // Per-image nuisances, sampled independently of class content.
  double brightness_range = 0.35;  // multiplicative factor in [1 - r, 1 + r]
  double contrast_range = 0.3;
  double hue_range = 0.5;          // hue rotation in turns, [-r, r]
  double noise_sigma = 0.03;
  std::uint64_t seed = 0;
};

std::vector<ImageSample> generate_synthetic(const SyntheticSpec& spec);

// Pixel count per class over all labeled samples (ignore pixels skipped).
std::vector<std::int64_t> class_pixel_counts(const std::vector<ImageSample>& samples,
                                             int n_classes);

}  // namespace picie
