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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace picie {

// Dense channel-major (C x H x W) array of doubles. Images are 3 x H x W with
// values in [0, 1]; feature maps are D x H' x W'.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : c(channels), h(height), w(width),
        data(static_cast<std::size_t>(channels) * height * width, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

  double& at(int ch, int y, int x) {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  double at(int ch, int y, int x) const {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  std::span<double> channel(int ch) { return {data.data() + ch * plane(), plane()}; }
  std::span<const double> channel(int ch) const {
    return {data.data() + ch * plane(), plane()};
  }

  bool operator==(const Tensor&) const = default;
};

// Integer label map (H x W), row-major.
struct LabelGrid {
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> data;

  LabelGrid() = default;
  LabelGrid(int height, int width, std::int32_t fill = 0)
      : h(height), w(width), data(static_cast<std::size_t>(height) * width, fill) {}

  std::size_t size() const { return data.size(); }
  std::int32_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  std::int32_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }

  bool operator==(const LabelGrid&) const = default;
};

// Gathers the D-vector at pixel (y, x) of a channel-major tensor.
inline void gather_pixel(const Tensor& t, int y, int x, std::span<double> out) {
  const std::size_t p = static_cast<std::size_t>(y) * t.w + x;
  for (int ch = 0; ch < t.c; ++ch) out[ch] = t.data[ch * t.plane() + p];
}

// Transposes a channel-major tensor into row-major pixel vectors (H*W x C).
std::vector<double> to_pixel_rows(const Tensor& t);

}  // namespace picie
