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
#include <vector>

#include "picie/tensor.hpp"

namespace picie {

// Decodes an 8-bit PNG, PPM (P6) or PGM (P5) into a 3 x H x W tensor in
// [0, 1]. Grayscale inputs are replicated to three channels; palettes are
// expanded. Throws DataError on unreadable input.
Tensor read_image(const std::filesystem::path& path);

// Decodes a single-channel integer map. Paletted PNGs yield palette indices,
// grayscale PNG/PGM yield raw values. Color images are rejected.
LabelGrid read_label_map(const std::filesystem::path& path);

// 8-bit interleaved RGB buffer.
struct Rgb8Image {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> data;  // h * w * 3
};

Rgb8Image to_rgb8(const Tensor& image);
void write_png(const std::filesystem::path& path, const Rgb8Image& image);
void write_png(const std::filesystem::path& path, const Tensor& image);
// Label values must lie in [0, 255].
void write_label_png(const std::filesystem::path& path, const LabelGrid& labels);

}  // namespace picie
