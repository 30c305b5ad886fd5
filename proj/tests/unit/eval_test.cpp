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

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "picie/errors.hpp"
#include "picie/eval.hpp"
#include "picie/trainer.hpp"
#include "test_support.hpp"

namespace picie {
namespace {

ConfusionMatrix random_cm(int n_pred, int n_gt, Rng& rng) {
  ConfusionMatrix cm(n_pred, n_gt);
  for (int p = 0; p < n_pred; ++p)
    for (int g = 0; g < n_gt; ++g) cm.at(p, g) = static_cast<std::int64_t>(rng.below(50));
  return cm;
}

TEST(Hungarian, MatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int np = 1 + static_cast<int>(rng.below(6));
    const int ng = 1 + static_cast<int>(rng.below(6));
    const ConfusionMatrix cm = random_cm(np, ng, rng);
    const Matching m = hungarian_match(cm);
    EXPECT_EQ(m.matched_mass(cm), testing::brute_force_matched_mass(cm)) << np << "x" << ng;
    std::vector<int> seen(ng, 0);
    for (int g : m.pred_to_gt)
      if (g >= 0) {
        EXPECT_EQ(++seen[g], 1);
      }
  }
}

TEST(Hungarian, RecoversRowPermutation) {
  const std::vector<int> perm = {2, 0, 3, 1};
  ConfusionMatrix cm(4, 4);
  for (int p = 0; p < 4; ++p) cm.at(p, perm[p]) = 10 + p;
  EXPECT_EQ(hungarian_match(cm).pred_to_gt, perm);
}

TEST(Metrics, DiagonalIsPerfect) {
  const auto cm = ConfusionMatrix::from_rows({{5, 0, 0}, {0, 2, 0}, {0, 0, 9}});
  const MetricsReport r = metrics(cm, hungarian_match(cm));
  EXPECT_EQ(r.matching.pred_to_gt, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.miou, 1.0);
  EXPECT_EQ(r.pixels, 16);
}

TEST(Metrics, TwoByTwoExample) {
  const auto cm = ConfusionMatrix::from_rows({{3, 1}, {0, 4}});
  const MetricsReport r = metrics(cm, hungarian_match(cm));
  EXPECT_EQ(r.matching.pred_to_gt, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.875);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[0], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[1], 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.miou, 0.775);
}

TEST(Metrics, AllInOneCluster) {
  const auto cm = ConfusionMatrix::from_rows({{5, 5}, {0, 0}});
  const MetricsReport r = metrics(cm, hungarian_match(cm));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.miou, 0.25);
}

TEST(Metrics, AbsentClassExcludedFromMean) {
  const auto cm = ConfusionMatrix::from_rows({{4, 0, 0}, {0, 6, 0}, {0, 0, 0}});
  const MetricsReport r = metrics(cm, hungarian_match(cm));
  EXPECT_FALSE(r.per_class_iou[2].has_value());
  EXPECT_EQ(r.miou, 1.0);
}

TEST(Metrics, UnmatchedClustersCountAsErrors) {
  const auto cm = ConfusionMatrix::from_rows({{4, 1}, {1, 3}, {5, 0}});
  const MetricsReport r = metrics(cm, hungarian_match(cm));
  EXPECT_EQ(r.matching.matched_mass(cm), 8);
  EXPECT_DOUBLE_EQ(r.accuracy, 8.0 / 14.0);
  for (const auto& iou : r.per_class_iou) {
    ASSERT_TRUE(iou.has_value());
    EXPECT_GE(*iou, 0.0);
    EXPECT_LE(*iou, 1.0);
  }
}

TEST(ConfusionMatrix, SkipsIgnoreAndRejectsOutOfRange) {
  LabelGrid pred(1, 4), gt(1, 4);
  pred.data = {0, 1, 1, 0};
  gt.data = {0, 1, 255, 1};
  ConfusionMatrix cm(2, 2);
  cm.add(pred, gt, 255);
  EXPECT_EQ(cm.total(), 3);
  EXPECT_EQ(cm.at(0, 1), 1);
  gt.data[2] = 7;
  EXPECT_THROW(cm.add(pred, gt, 255), ConfigError);
  EXPECT_THROW(cm.add(pred, LabelGrid(2, 2), 255), ConfigError);
}

TEST(Partitions, SingleFullPartitionEqualsGlobal) {
  Rng rng(2);
  const auto cm = random_cm(4, 4, rng);
  const Matching m = hungarian_match(cm);
  const auto parts = partition_metrics(cm, m, {Partition{"all", {0, 1, 2, 3}}});
  const MetricsReport full = metrics(cm, m);
  EXPECT_DOUBLE_EQ(parts.at("all").accuracy, full.accuracy);
  EXPECT_DOUBLE_EQ(parts.at("all").miou, full.miou);
}

TEST(Partitions, ComplementaryPartitionsConservePixels) {
  Rng rng(3);
  const auto cm = random_cm(5, 5, rng);
  const auto parts = partition_metrics(cm, hungarian_match(cm), {{"a", {0, 3}}, {"b", {1, 2, 4}}});
  EXPECT_EQ(parts.at("a").pixels + parts.at("b").pixels, cm.total());
}

TEST(Partitions, MatchesDirectSubmatrixComputation) {
  const auto cm = ConfusionMatrix::from_rows({{10, 2, 0, 1}, {3, 8, 1, 0}, {0, 1, 7, 2}, {1, 0, 2, 9}});
  const Matching m = hungarian_match(cm);
  ASSERT_EQ(m.pred_to_gt, (std::vector<int>{0, 1, 2, 3}));
  const auto r = partition_metrics(cm, m, {{"first", {0, 1}}}).at("first");
  // Columns 0 and 1 only: total 25, matched 10 + 8.
  EXPECT_DOUBLE_EQ(r.accuracy, 18.0 / 25.0);
  const double iou0 = 10.0 / (14.0 + 12.0 - 10.0);
  const double iou1 = 8.0 / (11.0 + 11.0 - 8.0);
  EXPECT_DOUBLE_EQ(r.miou, (iou0 + iou1) / 2);
}

TEST(Partitions, InvalidSpecsRejected) {
  const auto cm = ConfusionMatrix::from_rows({{1, 0}, {0, 1}});
  const Matching m = hungarian_match(cm);
  EXPECT_THROW(partition_metrics(cm, m, {{"empty", {}}}), ConfigError);
  EXPECT_THROW(partition_metrics(cm, m, {{"a", {0}}, {"b", {0, 1}}}), ConfigError);
  EXPECT_THROW(partition_metrics(cm, m, {{"a", {2}}}), ConfigError);

  const Partition p = parse_partition("stuff:0-2,5");
  EXPECT_EQ(p.name, "stuff");
  EXPECT_EQ(p.classes, (std::vector<int>{0, 1, 2, 5}));
  EXPECT_THROW(parse_partition("nocolon"), ConfigError);
  EXPECT_THROW(parse_partition("x:3-1"), ConfigError);
  EXPECT_THROW(parse_partition("x:a"), ConfigError);
}

class PredictionTest : public ::testing::Test {
 protected:
  std::vector<ImageSample> data = testing::tiny_synthetic(4, 64, 5);
  Extractor extractor{ExtractorConfig{BackboneKind::kTiny, 16, 4, std::nullopt}, 3};
};

TEST_F(PredictionTest, CellsCoverLabelBlocks) {
  Rng rng(4);
  const Centroids c = testing::random_centroids(3, 16, rng);
  const auto preds = predict_labels(data, extractor, c);
  ASSERT_EQ(preds[0].h, 64);
  const LabelGrid coarse = assign(extractor.extract(data[0].image).values, c);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(preds[0].at(y, x), coarse.at(y / 4, x / 4));

  const Centroids one = testing::random_centroids(1, 16, rng);
  for (const auto& p : predict_labels(data, extractor, one))
    for (auto v : p.data) EXPECT_EQ(v, 0);
}

TEST_F(PredictionTest, InvariantToPositiveFeatureScaling) {
  Rng rng(5);
  const Centroids c = testing::random_centroids(4, 16, rng);
  const Tensor z = extractor.extract(data[1].image).values;
  Tensor scaled = z;
  for (auto& v : scaled.data) v *= 3.5;
  EXPECT_EQ(assign(z, c), assign(scaled, c));
}

TEST_F(PredictionTest, RobustnessIdentityEqualsClean) {
  Rng rng(6);
  Checkpoint ck;
  ck.extractor = extractor.config();
  ck.params = extractor.parameters();
  ck.eval_centroids = testing::random_centroids(4, 16, rng);
  TransformRanges none;
  none.jitter_p = none.grayscale_p = none.blur_p = none.flip_p = 0.0;
  none.crop_min = none.crop_max = 1.0;
  const RobustnessReport r = robustness_eval(data, ck, 6, rng, none);
  EXPECT_EQ(r.photometric.accuracy, r.clean.accuracy);
  EXPECT_EQ(r.geometric.accuracy, r.clean.accuracy);
  EXPECT_EQ(r.geometric.miou, r.clean.miou);
  const MetricsReport clean = evaluate(data, ck, 6);
  EXPECT_EQ(clean.accuracy, r.clean.accuracy);

  Checkpoint bare = ck;
  bare.eval_centroids.reset();
  EXPECT_THROW(evaluate(data, bare, 6), ConfigError);
}

TEST(Robustness, FlipWithSymmetricPredictorKeepsAccuracy) {
  // Constant images give a left-right symmetric prediction.
  std::vector<ImageSample> data(2);
  for (int i = 0; i < 2; ++i) {
    data[i].id = "s" + std::to_string(i);
    data[i].image = Tensor(3, 32, 32, 0.2 + 0.5 * i);
    data[i].labels = LabelGrid(32, 32, i);
  }
  const Extractor e(ExtractorConfig{BackboneKind::kTiny, 16, 4, std::nullopt}, 8);
  Checkpoint ck;
  ck.extractor = e.config();
  ck.params = e.parameters();
  Rng rng(9);
  ck.eval_centroids = testing::random_centroids(2, 16, rng);
  TransformRanges flip;
  flip.jitter_p = flip.grayscale_p = flip.blur_p = 0.0;
  flip.flip_p = 1.0;
  flip.crop_min = flip.crop_max = 1.0;
  const RobustnessReport r = robustness_eval(data, ck, 2, rng, flip);
  EXPECT_EQ(r.geometric.accuracy, r.clean.accuracy);
}

TEST(Render, MajorityVote) {
  std::vector<ImageSample> data(1);
  data[0].image = Tensor(3, 1, 10);
  data[0].labels = LabelGrid(1, 10);
  data[0].labels->data = {0, 0, 0, 1, 1, 2, 2, 1, 1, 0};
  LabelGrid pred(1, 10);
  pred.data = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto palette = default_palette(3);
  // Cluster 0: classes 0,0,0,1,1 -> 60/40 -> class 0. Cluster 1: 2,2,1,1,0 -> tie 1/2 -> class 1.
  const auto img = render_majority_vote({pred}, data, 3, palette);
  ASSERT_EQ(img.size(), 1u);
  auto color_at = [&](int i) { return Color{img[0].data[3 * i], img[0].data[3 * i + 1], img[0].data[3 * i + 2]}; };
  EXPECT_EQ(color_at(0), palette[0]);
  EXPECT_EQ(color_at(9), palette[1]);

  // Clusters equal to ground truth reproduce the gt coloring.
  const auto same = render_majority_vote({*data[0].labels}, data, 3, palette);
  for (int i = 0; i < 10; ++i) {
    const Color c{same[0].data[3 * i], same[0].data[3 * i + 1], same[0].data[3 * i + 2]};
    EXPECT_EQ(c, palette[data[0].labels->data[i]]);
  }
}

TEST(Render, EmptyClusterGetsReservedColor) {
  std::vector<ImageSample> data(1);
  data[0].image = Tensor(3, 1, 2);
  data[0].labels = LabelGrid(1, 2, 255);
  LabelGrid pred(1, 2, 1);
  const auto img = render_majority_vote({pred}, data, 2, default_palette(2));
  EXPECT_EQ(img[0].data[0], kEmptyClusterColor[0]);
  const auto palette = default_palette(27);
  for (const auto& c : palette) EXPECT_NE(c, kEmptyClusterColor);
}

TEST(NearestNeighbors, DuplicateImageRanksFirst) {
  Rng rng(10);
  std::vector<FeatureMap> corpus;
  const Tensor f = testing::random_unit_map(8, 6, 6, rng);
  corpus.push_back({f, "query", 1});
  corpus.push_back({testing::random_unit_map(8, 6, 6, rng), "other", 1});
  corpus.push_back({f, "twin", 1});
  const NeighborResult r = nearest_neighbors(corpus, "query", 2, 4, 5);
  ASSERT_EQ(r.neighbors.size(), 5u);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.neighbors[0].image_id, "twin");
  EXPECT_EQ(r.neighbors[0].y, 2);
  EXPECT_EQ(r.neighbors[0].x, 4);
  EXPECT_NEAR(r.neighbors[0].distance, 0.0, 1e-12);
  for (std::size_t i = 1; i < r.neighbors.size(); ++i)
    EXPECT_LE(r.neighbors[i - 1].distance, r.neighbors[i].distance);
  for (const auto& n : r.neighbors) EXPECT_FALSE(n.image_id == "query" && n.y == 2 && n.x == 4);
}

TEST(NearestNeighbors, EdgeCases) {
  Rng rng(11);
  const std::vector<FeatureMap> corpus = {{testing::random_unit_map(4, 4, 4, rng), "a", 1}};
  EXPECT_TRUE(nearest_neighbors(corpus, "a", 0, 0, 0).neighbors.empty());
  const NeighborResult all = nearest_neighbors(corpus, "a", 0, 0, 100, 2);
  EXPECT_TRUE(all.truncated);
  EXPECT_EQ(all.neighbors.size(), 3u);
  EXPECT_THROW(nearest_neighbors(corpus, "a", 4, 0, 1), ConfigError);
  try {
    nearest_neighbors(corpus, "zzz", 0, 0, 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("available: a"), std::string::npos);
  }
}

TEST(Json, ReportLayout) {
  const auto cm = ConfusionMatrix::from_rows({{3, 1, 0}, {0, 4, 0}, {0, 0, 0}});
  MetricsReport r = metrics(cm, hungarian_match(cm));
  r.partitions = partition_metrics(cm, r.matching, {{"low", {0}}, {"high", {1, 2}}});
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 0.875);
  EXPECT_TRUE(j["per_class_iou"][2].is_null());
  EXPECT_EQ(j["pixels"].get<int>(), 8);
  EXPECT_TRUE(j["partitions"].contains("low"));
  EXPECT_TRUE(j["partitions"]["high"].contains("miou"));

  RobustnessReport rob{r, r, r};
  const auto k = nlohmann::json::parse(to_json(r, rob));
  EXPECT_TRUE(k["robustness"].contains("photometric"));
  EXPECT_EQ(to_json(r), to_json(r));
}

}  // namespace
}  // namespace picie
