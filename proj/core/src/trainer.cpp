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

#include "picie/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "linalg.hpp"
#include "picie/errors.hpp"

namespace picie {

using linalg::RowMat;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void accumulate(Gradients& into, const Gradients& from, double scale = 1.0) {
  for (std::size_t i = 0; i < into.size(); ++i)
    for (std::size_t j = 0; j < into[i].size(); ++j) into[i][j] += scale * from[i][j];
}

}  // namespace

Extractor make_extractor(const ExtractorConfig& config, std::uint64_t seed) {
  return Extractor(config, Rng::mix(seed ^ 0x5eedf00dULL));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (k1 < 2 && method == Method::kPicie) throw ConfigError("K1 must be at least 2");
  if (k1 < 1) throw ConfigError("K1 must be at least 1");
  if (k2 != 0 && k2 < 2) throw ConfigError("K2 must be 0 (disabled) or at least 2");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (adam.lr <= 0.0) throw ConfigError("learning rate must be positive");
  kmeans.validate();
}

Trainer::Trainer(const std::vector<ImageSample>& dataset, TrainConfig config, ExtractorConfig extractor,
                 std::uint64_t config_hash)
    : dataset_(dataset),
      config_(std::move(config)),
      extractor_(make_extractor(extractor, config_.seed)),
      rng_(config_.seed),
      config_hash_(config_hash) {
  config_.validate();
  if (dataset_.empty()) throw ConfigError("training dataset is empty");
  adam_ = Adam(config_.adam, extractor_.parameters());
}

Trainer::Trainer(const std::vector<ImageSample>& dataset, TrainConfig config, const Checkpoint& ck)
    : dataset_(dataset),
      config_(std::move(config)),
      extractor_(ck.extractor, ck.params),
      epoch_(ck.epoch),
      config_hash_(ck.config_hash),
      eval_centroids_(ck.eval_centroids) {
  config_.validate();
  if (dataset_.empty()) throw ConfigError("training dataset is empty");
  if (ck.method != config_.method) throw ConfigError("checkpoint was trained with a different method");
  adam_ = Adam(config_.adam, extractor_.parameters());
  if (!ck.adam_m.empty()) {
    if (ck.adam_m.size() != ck.params.size() || ck.adam_v.size() != ck.params.size())
      throw DataError("checkpoint optimizer state does not match its parameters");
    adam_.first_moment() = ck.adam_m;
    adam_.second_moment() = ck.adam_v;
    adam_.set_steps(ck.adam_steps);
  }
  if (!ck.rng_state.empty()) rng_.set_state(ck.rng_state);
}

std::vector<std::size_t> Trainer::batch_order() {
  std::vector<std::size_t> order(dataset_.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng_);
  return order;
}

double Trainer::picie_image_loss(std::size_t index, Gradients* grads, double scale,
                                 std::vector<HeadLosses>* heads) const {
  const ImageSample& sample = dataset_[index];
  const PseudoLabelEntry& first = pseudo_labels_.front().entries[index];
  const TransformRecord& rec = first.record;
  const int stride = extractor_.config().stride;
  const GeometricParams feat_geo = rec.geo.at_stride(stride);

  const std::vector<Tensor> inputs = {
      apply_geometric(apply_photometric(sample.image, rec.photo1), rec.geo, GridKind::kImage),
      apply_photometric(sample.image, rec.photo2)};

  FeatureLoss loss = [&](ag::Tape& tape, std::span<const int> feats) {
    const int z1_node = feats[0];
    const Tensor& raw2 = tape.value(feats[1]);
    const Box box = feat_geo.box(raw2.h, raw2.w);
    const int z2_node = tape.l2_normalize(
        tape.resample(feats[1], box, feat_geo.out_side, feat_geo.out_side, feat_geo.flip), 1e-12);
    const Tensor& z1 = tape.value(z1_node);
    const Tensor& z2 = tape.value(z2_node);
    Tensor dz1(z1.c, z1.h, z1.w), dz2(z2.c, z2.h, z2.w);
    const bool want_grad = grads != nullptr;

    double combined = 0.0;
    for (std::size_t h = 0; h < pseudo_labels_.size(); ++h) {
      const PseudoLabelEntry& e = pseudo_labels_[h].entries[index];
      const double lam = lambdas_[h];
      const double s = scale * lam * 0.5;
      const Centroids& c1 = pseudo_labels_[h].centroids1;
      const Centroids& c2 = pseudo_labels_[h].centroids2;
      HeadLosses hl;
      hl.k = c1.k;
      if (config_.cross_view == CrossViewMode::kPrototype) {
        const WithinCross wc = within_and_cross(z1, z2, e.view1, e.view2, c1, c2, weights1_[h], weights2_[h],
                                                want_grad ? &dz1 : nullptr, want_grad ? &dz2 : nullptr,
                                                WithinCrossScales{s, s});
        hl.within = wc.within;
        hl.cross = wc.cross;
      } else {
        hl.within = l_clust_map(z1, e.view1, c1, weights1_[h], want_grad ? &dz1 : nullptr, s) +
                    l_clust_map(z2, e.view2, c2, weights2_[h], want_grad ? &dz2 : nullptr, s);
        hl.cross = mse_cross_view(z1, z2, want_grad ? &dz1 : nullptr, want_grad ? &dz2 : nullptr, s);
      }
      hl.total = total_loss(hl.within, hl.cross);
      combined += lam * hl.total;
      if (heads) heads->push_back(hl);
    }
    if (want_grad) {
      tape.seed(z1_node, dz1);
      tape.seed(z2_node, dz2);
    }
    return combined;
  };

  const std::string ids[] = {sample.id};
  if (grads) {
    LossAndGradient lg = gradient_of_loss(extractor_, inputs, loss, ids);
    accumulate(*grads, lg.grads);
    return lg.loss;
  }
  ag::Tape tape(extractor_.parameters(), nullptr, false);
  std::vector<int> feats;
  for (const auto& in : inputs) feats.push_back(extractor_.forward(tape, tape.constant(in)));
  const double value = loss(tape, feats);
  if (!std::isfinite(value)) throw NumericalError("non-finite loss for image " + sample.id);
  return value;
}

EpochReport Trainer::picie_epoch() {
  EpochReport report;
  report.epoch = epoch_ + 1;

  // Clustering phase: parameters frozen.
  auto t0 = Clock::now();
  std::vector<int> ks = {config_.k1};
  if (config_.k2 > 0) ks.push_back(config_.k2);
  pseudo_labels_ = cluster_two_views(dataset_, extractor_, ks, rng_, config_.kmeans, nullptr,
                                     config_.transforms);
  weights1_.clear();
  weights2_.clear();
  for (auto& set : pseudo_labels_) {
    set.epoch = report.epoch;
    if (config_.single_clustering) {
      set.centroids1 = set.centroids2;
      set.centroids1.view = 1;
      for (auto& e : set.entries) e.view1 = e.view2;
    }
    const auto n1 = set.counts(1);
    const auto n2 = set.counts(2);
    const std::int64_t total = std::accumulate(n1.begin(), n1.end(), std::int64_t{0});
    weights1_.push_back(cluster_size_weights(n1, total));
    weights2_.push_back(cluster_size_weights(n2, total));
    report.histograms.push_back(n1);
    report.histograms.push_back(n2);
  }
  if (ks.size() == 2) {
    const BalanceCoefficients b = balance(config_.k1, config_.k2);
    lambdas_ = {b.k1, b.k2};
  } else {
    lambdas_ = {1.0};
  }
  report.clustering_seconds = seconds_since(t0);

  // Training phase: pseudo-labels and centroids frozen.
  t0 = Clock::now();
  const auto order = batch_order();
  report.heads.assign(ks.size(), HeadLosses{});
  for (std::size_t h = 0; h < ks.size(); ++h) report.heads[h].k = ks[h];
  std::size_t seen = 0;
  const std::size_t bs = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    const double scale = 1.0 / static_cast<double>(end - start);
    Gradients grads = zero_gradients(extractor_.parameters());
    for (std::size_t i = start; i < end; ++i) {
      std::vector<HeadLosses> heads;
      report.combined += picie_image_loss(order[i], &grads, scale, &heads);
      for (std::size_t h = 0; h < heads.size(); ++h) {
        report.heads[h].within += heads[h].within;
        report.heads[h].cross += heads[h].cross;
        report.heads[h].total += heads[h].total;
      }
      ++seen;
    }
    adam_.step(extractor_.parameters(), grads);
  }
  const double inv = 1.0 / static_cast<double>(seen);
  report.combined *= inv;
  for (auto& h : report.heads) {
    h.within *= inv;
    h.cross *= inv;
    h.total *= inv;
  }
  report.training_seconds = seconds_since(t0);
  return report;
}

EpochReport Trainer::mdc_epoch() {
  EpochReport report;
  report.epoch = epoch_ + 1;
  auto t0 = Clock::now();

  // Single view. Clustering sees the crop; training sees the same crop with
  // photometric jitter on top.
  std::vector<TransformRecord> records;
  records.reserve(dataset_.size());
  std::vector<Tensor> inputs, feats;
  for (const auto& s : dataset_) {
    records.push_back(sample_record(rng_, s.image.h, config_.transforms));
    const auto& r = records.back();
    feats.push_back(extractor_.extract(apply_geometric(s.image, r.geo, GridKind::kImage), s.id).values);
    inputs.push_back(apply_geometric(apply_photometric(s.image, r.photo1), r.geo, GridKind::kImage));
  }
  const int k = config_.k1;
  ClusteringResult clusters = cluster_feature_maps(feats, k, Rng(rng_.next_u64()), config_.kmeans);
  feats.clear();

  PseudoLabelSet set;
  set.epoch = report.epoch;
  set.centroids1 = clusters.centroids;
  set.centroids1.view = 1;
  set.centroids2 = set.centroids1;
  for (std::size_t i = 0; i < dataset_.size(); ++i)
    set.entries.push_back({dataset_[i].id, clusters.labels[i], clusters.labels[i], records[i]});
  const auto counts = set.counts(1);
  const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  const ClusterWeights weights = cluster_size_weights(counts, total);
  report.histograms = {counts, counts};
  pseudo_labels_ = {std::move(set)};

  // Fresh classifier: label ids carry no meaning across clustering rounds.
  const int dim = extractor_.config().dim;
  head_ = {Parameter{"head.weight", {k, dim, 1, 1}, std::vector<double>(std::size_t(k) * dim)},
           Parameter{"head.bias", {k}, std::vector<double>(k, 0.0)}};
  // Start from the nearest-centroid classifier: score = -|z - c|^2 + const.
  const Centroids& c = pseudo_labels_.front().centroids1;
  for (int l = 0; l < k; ++l) {
    const auto row = c.row(l);
    double sq = 0.0;
    for (int d = 0; d < dim; ++d) {
      head_[0].value[std::size_t(l) * dim + d] = 2.0 * row[d];
      sq += row[d] * row[d];
    }
    head_[1].value[l] = -sq;
  }
  Adam head_adam(config_.adam, head_);
  report.clustering_seconds = seconds_since(t0);

  t0 = Clock::now();
  const auto order = batch_order();
  const std::size_t bs = static_cast<std::size_t>(config_.batch_size);
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    const double scale = 1.0 / static_cast<double>(end - start);
    Gradients grads = zero_gradients(extractor_.parameters());
    Gradients head_grads = zero_gradients(head_);
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t idx = order[i];
      const LabelGrid& labels = pseudo_labels_.front().entries[idx].view1;
      FeatureLoss loss = [&](ag::Tape& tape, std::span<const int> fs) {
        const Tensor& z = tape.value(fs[0]);
        const int n = static_cast<int>(z.plane());
        const RowMat zm = linalg::owned(z.data.data(), z.c, n);
        const RowMat wm = linalg::owned(head_[0].value.data(), k, dim);
        RowMat sm = wm * zm;
        for (int l = 0; l < k; ++l) sm.row(l).array() += head_[1].value[l];
        Tensor scores(k, z.h, z.w);
        linalg::copy_to(sm, scores.data.data());
        Tensor ds(k, z.h, z.w);
        const double ce = parametric_ce_map(scores, labels, weights, &ds, scale);
        const RowMat dsm = linalg::owned(ds.data.data(), k, n);
        linalg::add_to(dsm * zm.transpose(), head_grads[0].data());
        for (int l = 0; l < k; ++l) head_grads[1][l] += linalg::row_sum(dsm, l);
        Tensor dz(z.c, z.h, z.w);
        linalg::copy_to(wm.transpose() * dsm, dz.data.data());
        tape.seed(fs[0], dz);
        return ce;
      };
      const Tensor* in = &inputs[idx];
      const std::string ids[] = {dataset_[idx].id};
      LossAndGradient lg = gradient_of_loss(extractor_, std::span<const Tensor>(in, 1), loss, ids);
      accumulate(grads, lg.grads);
      loss_sum += lg.loss;
    }
    adam_.step(extractor_.parameters(), grads);
    head_adam.step(head_, head_grads);
  }
  const double mean = loss_sum / static_cast<double>(order.size());
  report.heads = {HeadLosses{k, mean, 0.0, mean}};
  report.combined = mean;
  report.training_seconds = seconds_since(t0);
  return report;
}

EpochReport Trainer::run_epoch() {
  EpochReport r;
  switch (config_.method) {
    case Method::kPicie: r = picie_epoch(); break;
    case Method::kMdc: r = mdc_epoch(); break;
    case Method::kNoTrain: throw ConfigError("the no-train baseline has no training epochs");
  }
  if (!std::isfinite(r.combined)) throw NumericalError("epoch " + std::to_string(r.epoch) + " produced a non-finite loss");
  epoch_ = r.epoch;
  return r;
}

void Trainer::fit_eval_centroids() {
  std::vector<Tensor> feats;
  feats.reserve(dataset_.size());
  for (const auto& s : dataset_) feats.push_back(extractor_.extract(s.image, s.id).values);
  ClusteringResult r = cluster_feature_maps(feats, config_.k1, Rng(rng_.next_u64()), config_.kmeans);
  eval_centroids_ = std::move(r.centroids);
}

std::vector<EpochReport> Trainer::run(const std::function<void(const EpochReport&)>& on_epoch) {
  std::vector<EpochReport> reports;
  if (config_.method != Method::kNoTrain) {
    while (epoch_ < config_.epochs) {
      reports.push_back(run_epoch());
      if (on_epoch) on_epoch(reports.back());
    }
  }
  fit_eval_centroids();
  return reports;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.extractor = extractor_.config();
  ck.extractor.pretrained.reset();
  ck.params = extractor_.parameters();
  ck.method = config_.method;
  ck.epoch = epoch_;
  ck.config_hash = config_hash_;
  ck.adam_steps = adam_.steps();
  ck.adam_m = adam_.first_moment();
  ck.adam_v = adam_.second_moment();
  for (const auto& set : pseudo_labels_) {
    ck.last_centroids.push_back(set.centroids1);
    ck.last_centroids.push_back(set.centroids2);
  }
  ck.eval_centroids = eval_centroids_;
  ck.rng_state = rng_.state();
  return ck;
}

TrainResult train_picie(const std::vector<ImageSample>& dataset, TrainConfig config,
                        const ExtractorConfig& extractor) {
  config.method = Method::kPicie;
  Trainer t(dataset, std::move(config), extractor);
  TrainResult r;
  r.reports = t.run();
  r.checkpoint = t.checkpoint();
  return r;
}

TrainResult train_mdc(const std::vector<ImageSample>& dataset, TrainConfig config,
                      const ExtractorConfig& extractor) {
  config.method = Method::kMdc;
  Trainer t(dataset, std::move(config), extractor);
  TrainResult r;
  r.reports = t.run();
  r.checkpoint = t.checkpoint();
  return r;
}

TrainResult train_no_train(const std::vector<ImageSample>& dataset, TrainConfig config,
                           const ExtractorConfig& extractor) {
  config.method = Method::kNoTrain;
  Trainer t(dataset, std::move(config), extractor);
  TrainResult r;
  r.reports = t.run();
  r.checkpoint = t.checkpoint();
  return r;
}

TrainResult train(const std::vector<ImageSample>& dataset, const TrainConfig& config,
                  const ExtractorConfig& extractor) {
  switch (config.method) {
    case Method::kPicie: return train_picie(dataset, config, extractor);
    case Method::kMdc: return train_mdc(dataset, config, extractor);
    case Method::kNoTrain: return train_no_train(dataset, config, extractor);
  }
  throw ConfigError("unknown method");
}

}  // namespace picie
