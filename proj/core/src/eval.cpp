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

#include "picie/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include "picie/clustering.hpp"
#include "picie/errors.hpp"
#include "picie/grid_ops.hpp"

namespace picie {

ConfusionMatrix::ConfusionMatrix(int n_pred, int n_gt)
    : n_pred_(n_pred), n_gt_(n_gt), counts_(static_cast<std::size_t>(n_pred) * n_gt, 0) {
  if (n_pred < 1 || n_gt < 1) throw ConfigError("confusion matrix needs at least one row and column");
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  if (rows.empty()) throw ConfigError("confusion matrix needs at least one row");
  ConfusionMatrix cm(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int p = 0; p < cm.n_pred_; ++p) {
    if (static_cast<int>(rows[p].size()) != cm.n_gt_) throw ConfigError("ragged confusion matrix");
    for (int g = 0; g < cm.n_gt_; ++g) {
      if (rows[p][g] < 0) throw ConfigError("negative confusion count");
      cm.at(p, g) = rows[p][g];
    }
  }
  return cm;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(int pred) const {
  std::int64_t s = 0;
  for (int g = 0; g < n_gt_; ++g) s += at(pred, g);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int gt) const {
  std::int64_t s = 0;
  for (int p = 0; p < n_pred_; ++p) s += at(p, gt);
  return s;
}

void ConfusionMatrix::add(const LabelGrid& pred, const LabelGrid& gt, std::int32_t ignore_value) {
  if (pred.h != gt.h || pred.w != gt.w) throw ConfigError("prediction and ground truth shapes differ");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto g = gt.data[i];
    if (g == ignore_value) continue;
    const auto p = pred.data[i];
    if (p < 0 || p >= n_pred_ || g < 0 || g >= n_gt_)
      throw ConfigError("label outside confusion matrix range");
    ++at(p, g);
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_pred_ != n_pred_ || other.n_gt_ != n_gt_) throw ConfigError("confusion matrix shapes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

ConfusionMatrix ConfusionMatrix::columns(const std::vector<int>& gt_classes) const {
  ConfusionMatrix out(n_pred_, static_cast<int>(gt_classes.size()));
  for (std::size_t j = 0; j < gt_classes.size(); ++j) {
    const int g = gt_classes[j];
    if (g < 0 || g >= n_gt_) throw ConfigError("partition class " + std::to_string(g) + " out of range");
    for (int p = 0; p < n_pred_; ++p) out.at(p, static_cast<int>(j)) = at(p, g);
  }
  return out;
}

std::int64_t Matching::matched_mass(const ConfusionMatrix& cm) const {
  std::int64_t s = 0;
  for (int p = 0; p < static_cast<int>(pred_to_gt.size()); ++p)
    if (pred_to_gt[p] >= 0) s += cm.at(p, pred_to_gt[p]);
  return s;
}

Matching hungarian_match(const ConfusionMatrix& cm) {
  const int n = std::max(cm.n_pred(), cm.n_gt());
  if (n == 0) throw ConfigError("empty confusion matrix");
  // Minimize -count on the zero-padded square matrix (potentials method).
  auto cost = [&](int i, int j) -> std::int64_t {
    return (i < cm.n_pred() && j < cm.n_gt()) ? -cm.at(i, j) : 0;
  };
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      std::int64_t delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  Matching m;
  m.pred_to_gt.assign(cm.n_pred(), -1);
  for (int j = 1; j <= n; ++j) {
    const int row = p[j] - 1;
    const int col = j - 1;
    if (row < cm.n_pred() && col < cm.n_gt()) m.pred_to_gt[row] = col;
  }
  return m;
}

MetricsReport metrics(const ConfusionMatrix& cm, const Matching& matching) {
  if (static_cast<int>(matching.pred_to_gt.size()) != cm.n_pred())
    throw ConfigError("matching does not cover every predicted cluster");
  std::vector<int> gt_to_pred(cm.n_gt(), -1);
  for (int k = 0; k < cm.n_pred(); ++k) {
    const int g = matching.pred_to_gt[k];
    if (g < 0) continue;
    if (g >= cm.n_gt() || gt_to_pred[g] >= 0) throw ConfigError("matching is not injective");
    gt_to_pred[g] = k;
  }
  MetricsReport r;
  r.matching = matching;
  r.pixels = cm.total();
  r.accuracy = r.pixels > 0 ? static_cast<double>(matching.matched_mass(cm)) / static_cast<double>(r.pixels) : 0.0;
  double sum = 0.0;
  int counted = 0;
  for (int g = 0; g < cm.n_gt(); ++g) {
    const int k = gt_to_pred[g];
    const std::int64_t tp = k >= 0 ? cm.at(k, g) : 0;
    const std::int64_t predicted = k >= 0 ? cm.row_sum(k) : 0;
    const std::int64_t uni = cm.col_sum(g) + predicted - tp;
    if (uni == 0) {
      r.per_class_iou.push_back(std::nullopt);
      continue;
    }
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class_iou.push_back(iou);
    sum += iou;
    ++counted;
  }
  r.miou = counted > 0 ? sum / counted : 0.0;
  return r;
}

std::map<std::string, MetricsReport> partition_metrics(const ConfusionMatrix& cm, const Matching& matching,
                                                       const std::vector<Partition>& partitions) {
  std::map<std::string, MetricsReport> out;
  std::vector<int> owner(cm.n_gt(), -1);
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    const auto& part = partitions[i];
    if (part.classes.empty()) throw ConfigError("partition '" + part.name + "' is empty");
    for (int g : part.classes) {
      if (g < 0 || g >= cm.n_gt())
        throw ConfigError("partition '" + part.name + "' names class " + std::to_string(g) + " out of range");
      if (owner[g] >= 0) throw ConfigError("partitions overlap on class " + std::to_string(g));
      owner[g] = static_cast<int>(i);
    }
  }
  for (const auto& part : partitions) {
    const ConfusionMatrix sub = cm.columns(part.classes);
    Matching local;
    local.pred_to_gt.assign(cm.n_pred(), -1);
    for (int k = 0; k < cm.n_pred(); ++k) {
      const int g = matching.pred_to_gt[k];
      const auto it = std::find(part.classes.begin(), part.classes.end(), g);
      if (g >= 0 && it != part.classes.end()) local.pred_to_gt[k] = static_cast<int>(it - part.classes.begin());
    }
    out[part.name] = metrics(sub, local);
  }
  return out;
}

Partition parse_partition(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
    throw ConfigError("partition '" + spec + "' must look like name:a-b[,c]");
  Partition p;
  p.name = spec.substr(0, colon);
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        p.classes.push_back(std::stoi(item));
      } else {
        const int a = std::stoi(item.substr(0, dash));
        const int b = std::stoi(item.substr(dash + 1));
        if (b < a) throw ConfigError("descending range in partition '" + spec + "'");
        for (int c = a; c <= b; ++c) p.classes.push_back(c);
      }
    }
  } catch (const std::logic_error&) {
    throw ConfigError("malformed partition '" + spec + "'");
  }
  if (p.classes.empty()) throw ConfigError("partition '" + p.name + "' is empty");
  return p;
}

std::vector<LabelGrid> predict_labels(const std::vector<ImageSample>& dataset, const Extractor& extractor,
                                      const Centroids& centroids) {
  std::vector<LabelGrid> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset) {
    const LabelGrid coarse = assign(extractor.extract(s.image, s.id).values, centroids);
    const int h = s.labels ? s.labels->h : s.image.h;
    const int w = s.labels ? s.labels->w : s.image.w;
    out.push_back(resize_nearest(coarse, h, w));
  }
  return out;
}

std::vector<LabelGrid> predict_labels(const std::vector<ImageSample>& dataset, const Checkpoint& ck) {
  if (!ck.eval_centroids) throw ConfigError("checkpoint carries no K1 centroids for prediction");
  const Extractor extractor(ck.extractor, ck.params);
  return predict_labels(dataset, extractor, *ck.eval_centroids);
}

ConfusionMatrix confusion(const std::vector<LabelGrid>& predictions, const std::vector<ImageSample>& dataset,
                          int n_pred, int n_gt) {
  if (predictions.size() != dataset.size()) throw ConfigError("one prediction per sample required");
  ConfusionMatrix cm(n_pred, n_gt);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].labels) throw DataError("sample " + dataset[i].id + " has no ground truth");
    cm.add(predictions[i], *dataset[i].labels, dataset[i].ignore_value);
  }
  return cm;
}

namespace {

MetricsReport score(const std::vector<LabelGrid>& preds, const std::vector<ImageSample>& dataset, int n_pred,
                    int n_classes, const std::vector<Partition>& partitions) {
  const ConfusionMatrix cm = confusion(preds, dataset, n_pred, n_classes);
  const Matching m = hungarian_match(cm);
  MetricsReport r = metrics(cm, m);
  if (!partitions.empty()) r.partitions = partition_metrics(cm, m, partitions);
  return r;
}

}  // namespace

MetricsReport evaluate(const std::vector<ImageSample>& dataset, const Checkpoint& ck, int n_classes,
                       const std::vector<Partition>& partitions) {
  const auto preds = predict_labels(dataset, ck);
  return score(preds, dataset, ck.eval_centroids->k, n_classes, partitions);
}

RobustnessReport robustness_eval(const std::vector<ImageSample>& dataset, const Checkpoint& ck, int n_classes,
                                 Rng& rng, const TransformRanges& ranges) {
  if (!ck.eval_centroids) throw ConfigError("checkpoint carries no K1 centroids for prediction");
  const Extractor extractor(ck.extractor, ck.params);
  const Centroids& c = *ck.eval_centroids;

  std::vector<ImageSample> photo, geo;
  photo.reserve(dataset.size());
  geo.reserve(dataset.size());
  for (const auto& s : dataset) {
    if (!s.labels) throw DataError("sample " + s.id + " has no ground truth");
    const TransformRecord r = sample_record(rng, s.image.h, ranges);
    ImageSample p = s;
    p.image = apply_photometric(s.image, r.photo1);
    photo.push_back(std::move(p));
    ImageSample g = s;
    g.image = apply_geometric(s.image, r.geo, GridKind::kImage);
    g.labels = apply_geometric(*s.labels, r.geo, r.geo.out_side * s.labels->h / s.image.h);
    geo.push_back(std::move(g));
  }
  RobustnessReport out;
  out.clean = score(predict_labels(dataset, extractor, c), dataset, c.k, n_classes, {});
  out.photometric = score(predict_labels(photo, extractor, c), photo, c.k, n_classes, {});
  out.geometric = score(predict_labels(geo, extractor, c), geo, c.k, n_classes, {});
  return out;
}

std::vector<Color> default_palette(int n_classes) {
  std::vector<Color> out;
  out.reserve(n_classes);
  for (int i = 0; i < n_classes; ++i) {
    // Golden-angle hue walk; never pure black.
    const double h = std::fmod(i * 0.618033988749895, 1.0);
    const double s = 0.65 + 0.35 * ((i / 7) % 2);
    const double v = 0.95 - 0.3 * ((i / 3) % 2);
    double rgb[3];
    const double h6 = h * 6.0;
    const int sector = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    const double table[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
    for (int ch = 0; ch < 3; ++ch) rgb[ch] = table[sector][ch];
    out.push_back({static_cast<std::uint8_t>(std::lround(rgb[0] * 255)),
                   static_cast<std::uint8_t>(std::lround(rgb[1] * 255)),
                   static_cast<std::uint8_t>(std::lround(rgb[2] * 255))});
  }
  return out;
}

std::vector<Rgb8Image> render_majority_vote(const std::vector<LabelGrid>& predictions,
                                            const std::vector<ImageSample>& dataset, int n_pred,
                                            const std::vector<Color>& palette) {
  const int n_gt = static_cast<int>(palette.size());
  const ConfusionMatrix cm = confusion(predictions, dataset, n_pred, n_gt);
  std::vector<Color> cluster_color(n_pred, kEmptyClusterColor);
  for (int k = 0; k < n_pred; ++k) {
    std::int64_t best = 0;
    for (int g = 0; g < n_gt; ++g)
      if (cm.at(k, g) > best) {  // strict: ties keep the lower class id
        best = cm.at(k, g);
        cluster_color[k] = palette[g];
      }
  }
  std::vector<Rgb8Image> out;
  out.reserve(predictions.size());
  for (const auto& pred : predictions) {
    Rgb8Image img{pred.h, pred.w, std::vector<std::uint8_t>(pred.size() * 3)};
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Color& c = cluster_color.at(pred.data[i]);
      std::copy(c.begin(), c.end(), img.data.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
    out.push_back(std::move(img));
  }
  return out;
}

NeighborResult nearest_neighbors(const std::vector<FeatureMap>& corpus, const std::string& query_id, int y,
                                 int x, int k, int stride) {
  if (stride < 1) throw ConfigError("neighbor stride must be positive");
  const auto q = std::find_if(corpus.begin(), corpus.end(), [&](const FeatureMap& f) { return f.image_id == query_id; });
  if (q == corpus.end()) {
    std::string ids;
    for (const auto& f : corpus) ids += (ids.empty() ? "" : ", ") + f.image_id;
    throw ConfigError("unknown image id '" + query_id + "'; available: " + ids);
  }
  const Tensor& qf = q->values;
  if (y < 0 || y >= qf.h || x < 0 || x >= qf.w)
    throw ConfigError("query coordinate (" + std::to_string(y) + ", " + std::to_string(x) +
                      ") outside feature grid [0, " + std::to_string(qf.h) + ") x [0, " + std::to_string(qf.w) + ")");
  std::vector<double> query(qf.c);
  gather_pixel(qf, y, x, query);

  NeighborResult result;
  if (k <= 0) return result;
  std::vector<Neighbor> cands;
  std::vector<double> v(qf.c);
  for (const auto& f : corpus) {
    if (f.values.c != qf.c) throw ConfigError("corpus feature dimensions differ");
    for (int yy = ((y % stride) + stride) % stride; yy < f.values.h; yy += stride)
      for (int xx = ((x % stride) + stride) % stride; xx < f.values.w; xx += stride) {
        if (&f == &*q && yy == y && xx == x) continue;
        gather_pixel(f.values, yy, xx, v);
        double dot = 0.0;
        for (int c = 0; c < qf.c; ++c) dot += v[c] * query[c];
        cands.push_back({f.image_id, yy, xx, 1.0 - dot});
      }
  }
  auto less = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return std::make_pair(a.y, a.x) < std::make_pair(b.y, b.x);
  };
  const std::size_t take = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(k));
  result.truncated = cands.size() < static_cast<std::size_t>(k);
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end(), less);
  cands.resize(take);
  result.neighbors = std::move(cands);
  return result;
}

namespace {

nlohmann::ordered_json report_json(const MetricsReport& r, bool full) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["miou"] = r.miou;
  if (!full) return j;
  j["pixels"] = r.pixels;
  auto iou = nlohmann::ordered_json::array();
  for (const auto& v : r.per_class_iou) iou.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
  j["per_class_iou"] = iou;
  j["matching"] = r.matching.pred_to_gt;
  auto parts = nlohmann::ordered_json::object();
  for (const auto& [name, sub] : r.partitions) parts[name] = report_json(sub, false);
  j["partitions"] = parts;
  return j;
}

}  // namespace

std::string to_json(const MetricsReport& report, int indent) { return report_json(report, true).dump(indent); }

std::string to_json(const MetricsReport& clean, const std::optional<RobustnessReport>& robustness, int indent) {
  nlohmann::ordered_json j = report_json(clean, true);
  if (robustness) {
    j["robustness"] = {{"clean", report_json(robustness->clean, false)},
                       {"photometric", report_json(robustness->photometric, false)},
                       {"geometric", report_json(robustness->geometric, false)}};
  }
  return j.dump(indent);
}

}  // namespace picie
