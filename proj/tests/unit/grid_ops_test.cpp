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

#include <gtest/gtest.h>

#include <set>

#include "picie/grid_ops.hpp"
#include "test_support.hpp"

namespace picie {
namespace {

TEST(GridOps, FullBoxSameSizeIsIdentity) {
  Rng rng(1);
  const Tensor t = testing::random_image(7, 9, rng);
  EXPECT_EQ(sample_bilinear(t, Box{}, 7, 9), t);
}

TEST(GridOps, DoubleFlipIsIdentity) {
  Rng rng(2);
  const Tensor t = testing::random_image(5, 8, rng);
  EXPECT_EQ(flip_horizontal(flip_horizontal(t)), t);
  const LabelGrid g = testing::random_labels(6, 5, 4, rng);
  EXPECT_EQ(flip_horizontal(flip_horizontal(g)), g);
}

TEST(GridOps, FlippedResampleMirrorsColumns) {
  Rng rng(3);
  const Tensor t = testing::random_image(4, 6, rng);
  const Tensor f = sample_bilinear(t, Box{}, 4, 6, true);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x) EXPECT_EQ(f.at(c, y, x), t.at(c, y, 5 - x));
}

TEST(GridOps, HalvingARampAveragesPairs) {
  Tensor t(1, 1, 8);
  for (int x = 0; x < 8; ++x) t.at(0, 0, x) = x;
  const Tensor h = sample_bilinear(t, Box{}, 1, 4);
  // Output cell j centers on source coordinate 2j + 0.5.
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(h.at(0, 0, j), 2 * j + 0.5);
}

TEST(GridOps, ConstantStaysConstantUnderAnyBox) {
  Tensor t(2, 10, 10, 0.25);
  const Tensor r = sample_bilinear(t, Box{0.1, 0.2, 0.7, 0.9}, 13, 6, true);
  for (double v : r.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(GridOps, NearestResizeNeverInventsLabels) {
  Rng rng(4);
  LabelGrid g(9, 7);
  for (auto& v : g.data) v = static_cast<std::int32_t>(rng.below(3)) * 5;
  const LabelGrid r = resize_nearest(g, 20, 3);
  const std::set<std::int32_t> allowed(g.data.begin(), g.data.end());
  for (auto v : r.data) EXPECT_TRUE(allowed.count(v));
}

TEST(GridOps, CropCopiesWindow) {
  Rng rng(5);
  const Tensor t = testing::random_image(6, 6, rng);
  const Tensor c = crop(t, 1, 2, 3, 4);
  EXPECT_EQ(c.h, 3);
  EXPECT_EQ(c.w, 4);
  EXPECT_EQ(c.at(2, 2, 3), t.at(2, 3, 5));
}

}  // namespace
}  // namespace picie
