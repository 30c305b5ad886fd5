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

#include "picie/errors.hpp"
#include "picie/trainer.hpp"
#include "test_support.hpp"

namespace picie {
namespace {

ExtractorConfig small_extractor() { return ExtractorConfig{BackboneKind::kTiny, 16, 4, std::nullopt}; }

TrainConfig small_config(Method method, int epochs) {
  TrainConfig c;
  c.method = method;
  c.k1 = 4;
  c.k2 = 0;
  c.epochs = epochs;
  c.batch_size = 4;
  c.seed = 5;
  c.kmeans.init_batches = 2;
  c.kmeans.batch_size = 64;
  c.kmeans.update_period = 2;
  return c;
}

TransformRanges identity_ranges() {
  TransformRanges r;
  r.jitter_p = 0.0;
  r.grayscale_p = 0.0;
  r.blur_p = 0.0;
  r.flip_p = 0.0;
  r.crop_min = 1.0;
  r.crop_max = 1.0;
  return r;
}

class TrainerTest : public ::testing::Test {
 protected:
  std::vector<ImageSample> data = testing::tiny_synthetic(8, 32, 2);
};

TEST_F(TrainerTest, ZeroEpochsRejected) {
  EXPECT_THROW(Trainer(data, small_config(Method::kPicie, 0), small_extractor()), ConfigError);
  TrainConfig c = small_config(Method::kPicie, 1);
  c.k2 = 1;
  EXPECT_THROW(Trainer(data, c, small_extractor()), ConfigError);
  const std::vector<ImageSample> empty;
  EXPECT_THROW(Trainer(empty, small_config(Method::kPicie, 1), small_extractor()), ConfigError);
}

TEST_F(TrainerTest, OneEpochIsOneAlternation) {
  const TrainResult r = train_picie(data, small_config(Method::kPicie, 1), small_extractor());
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].epoch, 1);
  EXPECT_EQ(r.checkpoint.epoch, 1);
  ASSERT_EQ(r.reports[0].heads.size(), 1u);
  EXPECT_EQ(r.reports[0].heads[0].k, 4);
  EXPECT_EQ(r.reports[0].histograms.size(), 2u);
  EXPECT_TRUE(r.checkpoint.eval_centroids.has_value());
  EXPECT_EQ(r.checkpoint.last_centroids.size(), 2u);
  EXPECT_GT(r.reports[0].combined, 0.0);
}

TEST_F(TrainerTest, SameSeedSameParameters) {
  const auto a = train_picie(data, small_config(Method::kPicie, 2), small_extractor());
  const auto b = train_picie(data, small_config(Method::kPicie, 2), small_extractor());
  EXPECT_EQ(a.checkpoint.params, b.checkpoint.params);
  EXPECT_EQ(a.reports[1].combined, b.reports[1].combined);
  TrainConfig other = small_config(Method::kPicie, 2);
  other.seed = 6;
  const auto c = train_picie(data, other, small_extractor());
  EXPECT_NE(a.checkpoint.params, c.checkpoint.params);
}

TEST_F(TrainerTest, ResumeContinuesWithTheNextEpoch) {
  const auto straight = train_picie(data, small_config(Method::kPicie, 2), small_extractor());

  const auto dir = testing::temp_dir("resume");
  Trainer first(data, small_config(Method::kPicie, 1), small_extractor());
  first.run_epoch();
  save_checkpoint(dir / "c.ckpt", first.checkpoint());

  Trainer resumed(data, small_config(Method::kPicie, 2), load_checkpoint(dir / "c.ckpt"));
  EXPECT_EQ(resumed.epoch(), 1);
  const auto reports = resumed.run();
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].epoch, 2);
  EXPECT_EQ(reports[0].combined, straight.reports[1].combined);
  EXPECT_EQ(resumed.extractor().parameters(), straight.checkpoint.params);

  EXPECT_THROW(Trainer(data, small_config(Method::kMdc, 2), load_checkpoint(dir / "c.ckpt")), ConfigError);
}

TEST_F(TrainerTest, IdentityTransformsMakeCrossEqualWithin) {
  TrainConfig c = small_config(Method::kPicie, 1);
  c.transforms = identity_ranges();
  Trainer t(data, c, small_extractor());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<HeadLosses> heads;
    if (i == 0) t.run_epoch();
    t.picie_image_loss(i, nullptr, 1.0, &heads);
    ASSERT_EQ(heads.size(), 1u);
    EXPECT_NEAR(heads[0].within, heads[0].cross, 1e-9);
  }
}

TEST_F(TrainerTest, CombinedLossIsBalancedSumOfHeads) {
  TrainConfig c = small_config(Method::kPicie, 1);
  c.k2 = 6;
  const auto r = train_picie(data, c, small_extractor());
  const auto& rep = r.reports[0];
  ASSERT_EQ(rep.heads.size(), 2u);
  EXPECT_EQ(rep.heads[1].k, 6);
  EXPECT_EQ(rep.histograms.size(), 4u);
  const BalanceCoefficients b = balance(4, 6);
  EXPECT_NEAR(rep.combined, b.k1 * rep.heads[0].total + b.k2 * rep.heads[1].total, 1e-12);
  for (const auto& h : rep.heads) EXPECT_NEAR(h.total, 0.5 * (h.within + h.cross), 1e-12);
  EXPECT_EQ(r.checkpoint.last_centroids.size(), 4u);
}

TEST_F(TrainerTest, SingleClusteringSharesLabels) {
  TrainConfig c = small_config(Method::kPicie, 1);
  c.single_clustering = true;
  Trainer t(data, c, small_extractor());
  t.run_epoch();
  const auto& set = t.pseudo_labels().front();
  for (const auto& e : set.entries) EXPECT_EQ(e.view1, e.view2);
  EXPECT_EQ(set.centroids1.data, set.centroids2.data);
}

TEST_F(TrainerTest, MseCrossViewTrains) {
  TrainConfig c = small_config(Method::kPicie, 1);
  c.cross_view = CrossViewMode::kMse;
  const auto r = train_picie(data, c, small_extractor());
  EXPECT_GE(r.reports[0].heads[0].cross, 0.0);
  EXPECT_LE(r.reports[0].heads[0].cross, 4.0);
}

TEST_F(TrainerTest, MdcWithOneClusterHasZeroLossAndKeepsParameters) {
  TrainConfig c = small_config(Method::kMdc, 1);
  c.k1 = 1;
  const auto r = train_mdc(data, c, small_extractor());
  EXPECT_EQ(r.reports[0].combined, 0.0);
  EXPECT_EQ(r.checkpoint.params, make_extractor(small_extractor(), c.seed).parameters());
}

TEST_F(TrainerTest, MdcProducesEvaluableCentroids) {
  const auto r = train_mdc(data, small_config(Method::kMdc, 2), small_extractor());
  ASSERT_EQ(r.reports.size(), 2u);
  ASSERT_TRUE(r.checkpoint.eval_centroids.has_value());
  EXPECT_EQ(r.checkpoint.eval_centroids->k, 4);
  EXPECT_EQ(r.checkpoint.method, Method::kMdc);
}

TEST_F(TrainerTest, NoTrainOnlyClusters) {
  const auto r = train_no_train(data, small_config(Method::kNoTrain, 1), small_extractor());
  EXPECT_TRUE(r.reports.empty());
  EXPECT_EQ(r.checkpoint.epoch, 0);
  EXPECT_EQ(r.checkpoint.params, make_extractor(small_extractor(), 5).parameters());
  EXPECT_TRUE(r.checkpoint.eval_centroids.has_value());
}

TEST(TrainerLoss, DecreasesOverTenEpochs) {
  SyntheticSpec spec;
  spec.n_images = 24;
  spec.side = 32;
  spec.n_classes = 4;
  spec.seed = 3;
  const auto data = generate_synthetic(spec);
  TrainConfig c = small_config(Method::kPicie, 10);
  c.adam.lr = 3e-3;
  const auto r = train_picie(data, c, small_extractor());
  ASSERT_EQ(r.reports.size(), 10u);
  EXPECT_LT(r.reports.back().heads[0].total, r.reports.front().heads[0].total);
}

}  // namespace
}  // namespace picie
