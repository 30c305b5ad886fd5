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

#include "picie/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "picie/color.hpp"
#include "picie/errors.hpp"

namespace picie {

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta > 0.0) {
    double h;
    if (mx == r)
      h = (g - b) / delta;
    else if (mx == g)
      h = 2.0 + (b - r) / delta;
    else
      h = 4.0 + (r - g) / delta;
    h /= 6.0;
    out.h = h - std::floor(h);
  }
  return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
  const double h6 = (hsv.h - std::floor(hsv.h)) * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double v = hsv.v;
  const double p = v * (1.0 - hsv.s);
  const double q = v * (1.0 - hsv.s * f);
  const double t = v * (1.0 - hsv.s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

Box GeometricParams::box(int h, int w) const {
  const double side = crop_factor * std::min(h, w);
  const double half_x = side / (2.0 * w);
  const double half_y = side / (2.0 * h);
  return Box{cx - half_x, cy - half_y, cx + half_x, cy + half_y};
}

GeometricParams GeometricParams::at_stride(int stride) const {
  GeometricParams g = *this;
  g.out_side = out_side / stride;
  return g;
}

std::array<double, TransformRecord::kFlatSize> TransformRecord::to_flat() const {
  std::array<double, kFlatSize> f{};
  std::size_t i = 0;
  for (const PhotometricParams* p : {&photo1, &photo2}) {
    f[i++] = p->jitter_active ? 1.0 : 0.0;
    f[i++] = p->brightness;
    f[i++] = p->contrast;
    f[i++] = p->saturation;
    f[i++] = p->hue;
    f[i++] = p->grayscale_active ? 1.0 : 0.0;
    f[i++] = p->blur_active ? 1.0 : 0.0;
    f[i++] = p->blur_sigma;
  }
  f[i++] = geo.flip ? 1.0 : 0.0;
  f[i++] = geo.crop_factor;
  f[i++] = geo.cx;
  f[i++] = geo.cy;
  f[i++] = geo.out_side;
  return f;
}

TransformRecord TransformRecord::from_flat(std::span<const double> f) {
  if (f.size() != kFlatSize) throw DataError("transform record has wrong length");
  TransformRecord r;
  std::size_t i = 0;
  for (PhotometricParams* p : {&r.photo1, &r.photo2}) {
    p->jitter_active = f[i++] != 0.0;
    p->brightness = f[i++];
    p->contrast = f[i++];
    p->saturation = f[i++];
    p->hue = f[i++];
    p->grayscale_active = f[i++] != 0.0;
    p->blur_active = f[i++] != 0.0;
    p->blur_sigma = f[i++];
  }
  r.geo.flip = f[i++] != 0.0;
  r.geo.crop_factor = f[i++];
  r.geo.cx = f[i++];
  r.geo.cy = f[i++];
  r.geo.out_side = static_cast<int>(f[i++]);
  return r;
}

TransformRecord TransformRecord::identity(int out_side) {
  TransformRecord r;
  r.geo.out_side = out_side;
  return r;
}

PhotometricParams sample_photometric(Rng& rng, const TransformRanges& rg) {
  PhotometricParams p;
  // Every draw is taken unconditionally so the stream position does not
  // depend on which flags fire.
  const bool jitter = rng.bernoulli(rg.jitter_p);
  const double b = rng.uniform(1.0 - rg.brightness, 1.0 + rg.brightness);
  const double c = rng.uniform(1.0 - rg.contrast, 1.0 + rg.contrast);
  const double s = rng.uniform(1.0 - rg.saturation, 1.0 + rg.saturation);
  const double h = rng.uniform(-rg.hue, rg.hue);
  const bool gray = rng.bernoulli(rg.grayscale_p);
  const bool blur = rng.bernoulli(rg.blur_p);
  const double sigma = rng.uniform(rg.blur_sigma_min, rg.blur_sigma_max);
  p.jitter_active = jitter;
  if (jitter) {
    p.brightness = b;
    p.contrast = c;
    p.saturation = s;
    p.hue = h;
  }
  p.grayscale_active = gray;
  p.blur_active = blur;
  p.blur_sigma = blur ? sigma : rg.blur_sigma_min;
  return p;
}

GeometricParams sample_geometric(Rng& rng, int out_side, const TransformRanges& rg) {
  GeometricParams g;
  g.out_side = out_side;
  g.flip = rng.bernoulli(rg.flip_p);
  g.crop_factor = rng.uniform(rg.crop_min, rg.crop_max);
  // Center drawn so the box stays inside the unit square (square images).
  const double half = g.crop_factor / 2.0;
  g.cx = rng.uniform(half, 1.0 - half);
  g.cy = rng.uniform(half, 1.0 - half);
  return g;
}

TransformRecord sample_record(Rng& rng, int out_side, const TransformRanges& ranges) {
  TransformRecord r;
  r.photo1 = sample_photometric(rng, ranges);
  r.photo2 = sample_photometric(rng, ranges);
  r.geo = sample_geometric(rng, out_side, ranges);
  return r;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

void blur_plane(std::span<double> plane, int h, int w, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(plane.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * plane[y * w + reflect(x + t, w)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * tmp[reflect(y + t, h) * w + x];
      plane[y * w + x] = acc;
    }
}

}  // namespace

Tensor apply_photometric(const Tensor& image, const PhotometricParams& p) {
  if (image.c != 3) throw ConfigError("photometric transforms need a 3-channel image");
  Tensor out = image;
  const std::size_t n = out.plane();
  double* r = out.data.data();
  double* g = r + n;
  double* b = g + n;

  if (p.jitter_active) {
    if (p.brightness != 1.0)
      for (auto& v : out.data) v = std::clamp(v * p.brightness, 0.0, 1.0);
    if (p.contrast != 1.0) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += luma(r[i], g[i], b[i]);
      mean /= static_cast<double>(n);
      for (auto& v : out.data) v = std::clamp((v - mean) * p.contrast + mean, 0.0, 1.0);
    }
    if (p.saturation != 1.0)
      for (std::size_t i = 0; i < n; ++i) {
        const double y = luma(r[i], g[i], b[i]);
        r[i] = std::clamp(y + (r[i] - y) * p.saturation, 0.0, 1.0);
        g[i] = std::clamp(y + (g[i] - y) * p.saturation, 0.0, 1.0);
        b[i] = std::clamp(y + (b[i] - y) * p.saturation, 0.0, 1.0);
      }
    if (p.hue != 0.0)
      for (std::size_t i = 0; i < n; ++i) {
        Hsv hsv = rgb_to_hsv(r[i], g[i], b[i]);
        hsv.h += p.hue;
        hsv.h -= std::floor(hsv.h);
        hsv_to_rgb(hsv, r[i], g[i], b[i]);
      }
  }
  if (p.grayscale_active)
    for (std::size_t i = 0; i < n; ++i) {
      const double y = std::clamp(luma(r[i], g[i], b[i]), 0.0, 1.0);
      r[i] = g[i] = b[i] = y;
    }
  if (p.blur_active) {
    const auto k = gaussian_kernel(p.blur_sigma);
    for (int ch = 0; ch < 3; ++ch) blur_plane(out.channel(ch), out.h, out.w, k);
    for (auto& v : out.data) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

namespace {

void check_box(const Box& box, int h, int w) {
  if ((box.x1 - box.x0) * w < 1.0 || (box.y1 - box.y0) * h < 1.0)
    throw ConfigError("geometric crop box is smaller than one cell");
  constexpr double kSlack = 1e-9;
  if (box.x0 < -kSlack || box.y0 < -kSlack || box.x1 > 1.0 + kSlack || box.y1 > 1.0 + kSlack)
    throw ConfigError("geometric crop box leaves the grid");
}

void normalize_pixels(Tensor& t) {
  const std::size_t n = t.plane();
  for (std::size_t p = 0; p < n; ++p) {
    double ss = 0.0;
    for (int ch = 0; ch < t.c; ++ch) ss += t.data[ch * n + p] * t.data[ch * n + p];
    const double inv = 1.0 / std::sqrt(ss + 1e-12);
    for (int ch = 0; ch < t.c; ++ch) t.data[ch * n + p] *= inv;
  }
}

}  // namespace

Tensor apply_geometric(const Tensor& grid, const GeometricParams& g, GridKind kind, int out_side) {
  if (kind == GridKind::kLabels) throw ConfigError("label grids use the LabelGrid overload");
  const int side = out_side > 0 ? out_side : g.out_side;
  if (side <= 0) throw ConfigError("geometric transform has no output side");
  const Box box = g.box(grid.h, grid.w);
  check_box(box, grid.h, grid.w);
  Tensor out = sample_bilinear(grid, box, side, side, g.flip);
  if (kind == GridKind::kFeatures) normalize_pixels(out);
  return out;
}

LabelGrid apply_geometric(const LabelGrid& grid, const GeometricParams& g, int out_side) {
  const int side = out_side > 0 ? out_side : g.out_side;
  if (side <= 0) throw ConfigError("geometric transform has no output side");
  const Box box = g.box(grid.h, grid.w);
  check_box(box, grid.h, grid.w);
  return sample_nearest(grid, box, side, side, g.flip);
}

}  // namespace picie
