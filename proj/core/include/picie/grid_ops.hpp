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

#include <vector>

#include "picie/tensor.hpp"

namespace picie {

// Axis-aligned box in normalized coordinates of a grid: [x0, x1] x [y0, y1]
// with 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
};

// Per-axis bilinear taps. Output index j reads source cells lo[j] and hi[j]
// with weights (1 - frac[j]) and frac[j]. Sampling uses pixel-center
// alignment, so a full-range box at equal length is an exact identity.
struct AxisTaps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> frac;
};

AxisTaps bilinear_taps(int src_len, double start, double end, int out_len, bool flip);

// Nearest-neighbor source index per output cell, same alignment as above.
std::vector<int> nearest_taps(int src_len, double start, double end, int out_len,
                              bool flip);

// Bilinear resample of the region `box` of `src` to out_h x out_w, optionally
// mirrored horizontally.
Tensor sample_bilinear(const Tensor& src, const Box& box, int out_h, int out_w,
                       bool flip = false);
LabelGrid sample_nearest(const LabelGrid& src, const Box& box, int out_h, int out_w,
                         bool flip = false);

inline Tensor resize_bilinear(const Tensor& src, int out_h, int out_w) {
  return sample_bilinear(src, Box{}, out_h, out_w);
}
inline LabelGrid resize_nearest(const LabelGrid& src, int out_h, int out_w) {
  return sample_nearest(src, Box{}, out_h, out_w);
}

Tensor crop(const Tensor& src, int top, int left, int h, int w);
LabelGrid crop(const LabelGrid& src, int top, int left, int h, int w);

Tensor flip_horizontal(const Tensor& src);
LabelGrid flip_horizontal(const LabelGrid& src);

}  // namespace picie
