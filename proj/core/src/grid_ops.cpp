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

#include "picie/grid_ops.hpp"

#include <algorithm>
#include <cmath>

namespace picie {

AxisTaps bilinear_taps(int src_len, double start, double end, int out_len, bool flip) {
  AxisTaps taps;
  taps.lo.resize(out_len);
  taps.hi.resize(out_len);
  taps.frac.resize(out_len);
  const double origin = start * src_len;
  const double step = (end - start) * src_len / out_len;
  for (int j = 0; j < out_len; ++j) {
    const int jj = flip ? out_len - 1 - j : j;
    double u = origin + (jj + 0.5) * step - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(src_len - 1));
    const int lo = static_cast<int>(std::floor(u));
    const int hi = std::min(lo + 1, src_len - 1);
    taps.lo[j] = lo;
    taps.hi[j] = hi;
    taps.frac[j] = u - lo;
  }
  return taps;
}

std::vector<int> nearest_taps(int src_len, double start, double end, int out_len,
                              bool flip) {
  std::vector<int> idx(out_len);
  const double origin = start * src_len;
  const double step = (end - start) * src_len / out_len;
  for (int j = 0; j < out_len; ++j) {
    const int jj = flip ? out_len - 1 - j : j;
    const int i = static_cast<int>(std::floor(origin + (jj + 0.5) * step));
    idx[j] = std::clamp(i, 0, src_len - 1);
  }
  return idx;
}

Tensor sample_bilinear(const Tensor& src, const Box& box, int out_h, int out_w,
                       bool flip) {
  const AxisTaps ty = bilinear_taps(src.h, box.y0, box.y1, out_h, false);
  const AxisTaps tx = bilinear_taps(src.w, box.x0, box.x1, out_w, flip);
  Tensor out(src.c, out_h, out_w);
  for (int ch = 0; ch < src.c; ++ch) {
    const double* s = src.data.data() + ch * src.plane();
    double* o = out.data.data() + ch * out.plane();
    for (int i = 0; i < out_h; ++i) {
      const double fy = ty.frac[i];
      const double* r0 = s + static_cast<std::size_t>(ty.lo[i]) * src.w;
      const double* r1 = s + static_cast<std::size_t>(ty.hi[i]) * src.w;
      for (int j = 0; j < out_w; ++j) {
        const double fx = tx.frac[j];
        const double top = r0[tx.lo[j]] * (1.0 - fx) + r0[tx.hi[j]] * fx;
        const double bot = r1[tx.lo[j]] * (1.0 - fx) + r1[tx.hi[j]] * fx;
        o[i * out_w + j] = top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

LabelGrid sample_nearest(const LabelGrid& src, const Box& box, int out_h, int out_w,
                         bool flip) {
  const std::vector<int> iy = nearest_taps(src.h, box.y0, box.y1, out_h, false);
  const std::vector<int> ix = nearest_taps(src.w, box.x0, box.x1, out_w, flip);
  LabelGrid out(out_h, out_w);
  for (int i = 0; i < out_h; ++i)
    for (int j = 0; j < out_w; ++j) out.at(i, j) = src.at(iy[i], ix[j]);
  return out;
}

Tensor crop(const Tensor& src, int top, int left, int h, int w) {
  Tensor out(src.c, h, w);
  for (int ch = 0; ch < src.c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = src.at(ch, top + y, left + x);
  return out;
}

LabelGrid crop(const LabelGrid& src, int top, int left, int h, int w) {
  LabelGrid out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = src.at(top + y, left + x);
  return out;
}

Tensor flip_horizontal(const Tensor& src) {
  Tensor out(src.c, src.h, src.w);
  for (int ch = 0; ch < src.c; ++ch)
    for (int y = 0; y < src.h; ++y)
      for (int x = 0; x < src.w; ++x) out.at(ch, y, x) = src.at(ch, y, src.w - 1 - x);
  return out;
}

LabelGrid flip_horizontal(const LabelGrid& src) {
  LabelGrid out(src.h, src.w);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) out.at(y, x) = src.at(y, src.w - 1 - x);
  return out;
}

}  // namespace picie
