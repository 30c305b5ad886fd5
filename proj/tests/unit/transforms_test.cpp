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

#include <cmath>

#include "picie/color.hpp"
#include "picie/errors.hpp"
#include "picie/transforms.hpp"
#include "test_support.hpp"

namespace picie {
namespace {

TEST(SampleRecord, SameSeedSameRecord) {
  Rng a(7), b(7);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_record(a, 64), sample_record(b, 64));
}

TEST(SampleRecord, ActivationFrequencies) {
  Rng rng(1);
  const int n = 10000;
  int jitter = 0, gray = 0, blur = 0, flip = 0;
  for (int i = 0; i < n; ++i) {
    const PhotometricParams p = sample_photometric(rng);
    jitter += p.jitter_active;
    gray += p.grayscale_active;
    blur += p.blur_active;
    flip += sample_geometric(rng, 32).flip;
  }
  EXPECT_NEAR(jitter / double(n), 0.8, 0.02);
  EXPECT_NEAR(gray / double(n), 0.2, 0.02);
  EXPECT_NEAR(blur / double(n), 0.5, 0.02);
  EXPECT_NEAR(flip / double(n), 0.5, 0.02);
}

TEST(SampleRecord, ParametersWithinRanges) {
  Rng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const TransformRecord r = sample_record(rng, 32);
    for (const auto& p : {r.photo1, r.photo2}) {
      EXPECT_GE(p.brightness, 0.7);
      EXPECT_LE(p.brightness, 1.3);
      EXPECT_GE(p.contrast, 0.7);
      EXPECT_LE(p.contrast, 1.3);
      EXPECT_GE(p.saturation, 0.7);
      EXPECT_LE(p.saturation, 1.3);
      EXPECT_LE(std::abs(p.hue), 0.1);
      if (p.blur_active) {
        EXPECT_GE(p.blur_sigma, 0.1);
        EXPECT_LE(p.blur_sigma, 2.0);
      }
    }
    EXPECT_GE(r.geo.crop_factor, 0.5);
    EXPECT_LE(r.geo.crop_factor, 1.0);
    const Box b = r.geo.box(32, 32);
    EXPECT_GE(b.x0, 0.0);
    EXPECT_GE(b.y0, 0.0);
    EXPECT_LE(b.x1, 1.0);
    EXPECT_LE(b.y1, 1.0);
  }
}

TEST(TransformRecord, FlatRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const TransformRecord r = sample_record(rng, 48);
    const auto flat = r.to_flat();
    EXPECT_EQ(TransformRecord::from_flat(flat), r);
  }
}

TEST(Photometric, InactiveIsIdentity) {
  Rng rng(4);
  const Tensor img = testing::random_image(9, 11, rng);
  EXPECT_EQ(apply_photometric(img, PhotometricParams{}), img);
}

TEST(Photometric, GrayscaleEqualizesChannels) {
  Rng rng(5);
  const Tensor img = testing::random_image(6, 6, rng);
  PhotometricParams p;
  p.grayscale_active = true;
  const Tensor out = apply_photometric(img, p);
  for (std::size_t i = 0; i < out.plane(); ++i) {
    EXPECT_EQ(out.data[i], out.data[out.plane() + i]);
    EXPECT_EQ(out.data[i], out.data[2 * out.plane() + i]);
    const double y = 0.299 * img.data[i] + 0.587 * img.data[img.plane() + i] + 0.114 * img.data[2 * img.plane() + i];
    EXPECT_NEAR(out.data[i], y, 1e-12);
  }
}

TEST(Photometric, BlurPreservesImpulseMass) {
  Tensor img(3, 15, 15, 0.0);
  for (int c = 0; c < 3; ++c) img.at(c, 7, 7) = 1.0;
  for (double sigma : {0.1, 1.0, 2.0}) {
    PhotometricParams p;
    p.blur_active = true;
    p.blur_sigma = sigma;
    const Tensor out = apply_photometric(img, p);
    double mass = 0.0;
    for (double v : out.channel(0)) mass += v;
    EXPECT_NEAR(mass, 1.0, 1e-3) << "sigma " << sigma;
  }
}

TEST(Photometric, OutputClippedToUnitRange) {
  Rng rng(6);
  const Tensor img = testing::random_image(8, 8, rng);
  for (int i = 0; i < 50; ++i) {
    const Tensor out = apply_photometric(img, sample_photometric(rng));
    ASSERT_TRUE(out.same_shape(img));
    for (double v : out.data) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Photometric, BrightnessScalesBeforeClipping) {
  Tensor img(3, 1, 2, 0.0);
  img.data = {0.2, 0.6, 0.2, 0.6, 0.2, 0.6};
  PhotometricParams p;
  p.jitter_active = true;
  p.brightness = 1.25;
  const Tensor out = apply_photometric(img, p);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 1), 0.75);
}

TEST(Color, HsvRoundTrip) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    double r2, g2, b2;
    hsv_to_rgb(rgb_to_hsv(r, g, b), r2, g2, b2);
    EXPECT_NEAR(r, r2, 1e-12);
    EXPECT_NEAR(g, g2, 1e-12);
    EXPECT_NEAR(b, b2, 1e-12);
  }
}

TEST(Color, HueRotationByThirdPermutesPrimaries) {
  double r, g, b;
  Hsv red = rgb_to_hsv(1.0, 0.0, 0.0);
  red.h += 1.0 / 3.0;
  hsv_to_rgb(red, r, g, b);
  EXPECT_NEAR(r, 0.0, 1e-12);
  EXPECT_NEAR(g, 1.0, 1e-12);
  EXPECT_NEAR(b, 0.0, 1e-12);
}

TEST(Geometric, FullCenteredCropIsIdentity) {
  Rng rng(8);
  const Tensor img = testing::random_image(16, 16, rng);
  GeometricParams g;
  g.out_side = 16;
  EXPECT_EQ(apply_geometric(img, g, GridKind::kImage), img);
  const LabelGrid l = testing::random_labels(16, 16, 5, rng);
  EXPECT_EQ(apply_geometric(l, g), l);
}

TEST(Geometric, FlipTwiceIsIdentity) {
  Rng rng(9);
  const Tensor img = testing::random_image(12, 12, rng);
  GeometricParams g;
  g.flip = true;
  g.out_side = 12;
  EXPECT_EQ(apply_geometric(apply_geometric(img, g, GridKind::kImage), g, GridKind::kImage), img);
}

TEST(Geometric, TwoByTwoLabelFlip) {
  LabelGrid l(2, 2);
  l.data = {0, 1, 2, 3};
  GeometricParams g;
  g.flip = true;
  g.out_side = 2;
  EXPECT_EQ(apply_geometric(l, g).data, (std::vector<std::int32_t>{1, 0, 3, 2}));
}

TEST(Geometric, FeatureOutputIsUnitNorm) {
  Rng rng(10);
  const Tensor f = testing::random_unit_map(16, 8, 8, rng);
  for (int i = 0; i < 20; ++i) {
    const GeometricParams g = sample_geometric(rng, 32).at_stride(4);
    const Tensor out = apply_geometric(f, g, GridKind::kFeatures);
    for (std::size_t p = 0; p < out.plane(); ++p) {
      double s = 0.0;
      for (int c = 0; c < out.c; ++c) s += out.data[c * out.plane() + p] * out.data[c * out.plane() + p];
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-5);
    }
  }
}

TEST(Geometric, LabelAndFeatureShapesAgree) {
  Rng rng(11);
  const Tensor f = testing::random_unit_map(4, 8, 8, rng);
  const LabelGrid l = testing::random_labels(8, 8, 3, rng);
  for (int i = 0; i < 20; ++i) {
    const GeometricParams g = sample_geometric(rng, 32).at_stride(4);
    const Tensor a = apply_geometric(f, g, GridKind::kFeatures);
    const LabelGrid b = apply_geometric(l, g);
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.w, b.w);
  }
}

TEST(Geometric, ReplayIsBitIdentical) {
  Rng rng(12);
  const Tensor img = testing::random_image(32, 32, rng);
  const TransformRecord r = sample_record(rng, 32);
  const TransformRecord copy = TransformRecord::from_flat(r.to_flat());
  EXPECT_EQ(apply_geometric(apply_photometric(img, r.photo1), r.geo, GridKind::kImage),
            apply_geometric(apply_photometric(img, copy.photo1), copy.geo, GridKind::kImage));
}

TEST(Geometric, DegenerateBoxRejected) {
  const Tensor f(2, 2, 2, 1.0);
  GeometricParams g;
  g.crop_factor = 0.25;
  g.out_side = 2;
  EXPECT_THROW(apply_geometric(f, g, GridKind::kFeatures), ConfigError);
}

TEST(GaussianKernel, NormalizedAndSymmetric) {
  for (double s : {0.1, 0.7, 2.0}) {
    const auto k = gaussian_kernel(s);
    double sum = 0.0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
  }
}

}  // namespace
}  // namespace picie
