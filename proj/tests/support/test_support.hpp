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

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "picie/centroids.hpp"
#include "picie/dataio.hpp"
#include "picie/features.hpp"
#include "picie/rng.hpp"
#include "picie/tensor.hpp"

namespace picie {

inline void PrintTo(const Parameter& p, std::ostream* os) {
  *os << p.name << " (" << p.value.size() << " values)";
}

}  // namespace picie

namespace picie::testing {

inline Tensor random_unit_map(int c, int h, int w, Rng& rng) {
  Tensor t(c, h, w);
  for (auto& v : t.data) v = rng.normal();
  const std::size_t n = t.plane();
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) s += t.data[ch * n + p] * t.data[ch * n + p];
    s = std::sqrt(s);
    for (int ch = 0; ch < c; ++ch) t.data[ch * n + p] /= s;
  }
  return t;
}

inline Tensor random_image(int h, int w, Rng& rng) {
  Tensor t(3, h, w);
  for (auto& v : t.data) v = rng.uniform();
  return t;
}

inline Centroids random_centroids(int k, int d, Rng& rng) {
  Centroids c(k, d);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (auto& v : c.row(i)) {
      v = rng.normal();
      s += v * v;
    }
    for (auto& v : c.row(i)) v /= std::sqrt(s);
  }
  return c;
}

inline LabelGrid random_labels(int h, int w, int k, Rng& rng) {
  LabelGrid g(h, w);
  for (auto& v : g.data) v = static_cast<std::int32_t>(rng.below(k));
  return g;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("picie_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<ImageSample> tiny_synthetic(int n, int side = 32, std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.n_images = n;
  spec.side = side;
  spec.seed = seed;
  return generate_synthetic(spec);
}

struct GradientCheck {
  int coordinates = 0;
  double max_relative_error = 0.0;
};

// Central differences of `loss` against the tape gradient on `n_coords`
// random parameter coordinates with a nonzero analytic gradient.
inline GradientCheck check_parameter_gradient(Extractor& extractor, std::span<const Tensor> inputs,
                                              const FeatureLoss& loss, int n_coords, Rng& rng,
                                              double h = 1e-5) {
  const LossAndGradient lg = gradient_of_loss(extractor, inputs, loss);
  std::vector<std::pair<std::size_t, std::size_t>> live;
  for (std::size_t p = 0; p < lg.grads.size(); ++p)
    for (std::size_t i = 0; i < lg.grads[p].size(); ++i)
      if (std::abs(lg.grads[p][i]) > 1e-7) live.emplace_back(p, i);
  shuffle(live, rng);
  GradientCheck out;
  auto& params = extractor.parameters();
  for (int c = 0; c < n_coords && c < static_cast<int>(live.size()); ++c) {
    const auto [p, i] = live[c];
    const double keep = params[p].value[i];
    params[p].value[i] = keep + h;
    const double up = gradient_of_loss(extractor, inputs, loss).loss;
    params[p].value[i] = keep - h;
    const double down = gradient_of_loss(extractor, inputs, loss).loss;
    params[p].value[i] = keep;
    const double fd = (up - down) / (2 * h);
    const double g = lg.grads[p][i];
    const double rel = std::abs(g - fd) / std::max(std::abs(g), std::abs(fd));
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.coordinates;
  }
  return out;
}

}  // namespace picie::testing
