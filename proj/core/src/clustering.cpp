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

#include "picie/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "linalg.hpp"
#include "picie/errors.hpp"

namespace picie {

using linalg::RowMat;

namespace {
constexpr char kPseudoLabelMagic[9] = "PICIEPL1";
constexpr std::uint8_t kPseudoLabelVersion = 1;

void normalize(std::span<double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double inv = 1.0 / std::sqrt(ss + 1e-12);
  for (double& x : v) x *= inv;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Nearest centroid for every row using one GEMM; ties to the lowest index.
std::vector<int> nearest_block(const double* rows, std::size_t n, const Centroids& c,
                               std::vector<double>* dist) {
  const RowMat x = linalg::owned(rows, static_cast<Eigen::Index>(n), c.dim);
  const RowMat cm = linalg::owned(c.data.data(), c.k, c.dim);
  const RowMat sims = x * cm.transpose();
  std::vector<int> out(n);
  if (dist) dist->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_sim = sims(static_cast<Eigen::Index>(i), 0);
    for (int k = 1; k < c.k; ++k) {
      const double s = sims(static_cast<Eigen::Index>(i), k);
      if (s > best_sim) {
        best_sim = s;
        best = k;
      }
    }
    out[i] = best;
    if (dist) (*dist)[i] = 1.0 - best_sim;
  }
  return out;
}

void check_dims(int feature_dim, const Centroids& c) {
  if (feature_dim != c.dim)
    throw ConfigError("feature dim " + std::to_string(feature_dim) + " differs from centroid dim " +
                      std::to_string(c.dim));
  if (c.k < 1) throw ConfigError("centroid matrix is empty");
}

// Spherical Lloyd iterations from k-means++ seeds on rows[0, n).
Centroids lloyd(const PixelRows& rows, std::size_t n, int k, Rng& rng, int iterations) {
  const int dim = rows.dim;
  Centroids c(k, dim);
  // k-means++ seeding with cosine distance.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  std::copy_n(rows.row(first).begin(), dim, c.row(0).begin());
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::max(0.0, 1.0 - dot(rows.row(i), c.row(j - 1)));
      nearest[i] = std::min(nearest[i], d);
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= nearest[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = rng.below(n);
    }
    std::copy_n(rows.row(pick).begin(), dim, c.row(j).begin());
  }
  for (int j = 0; j < k; ++j) normalize(c.row(j));

  std::vector<int> labels;
  std::vector<double> dist;
  for (int it = 0; it < iterations; ++it) {
    std::vector<int> next = nearest_block(rows.data.data(), n, c, &dist);
    const bool stable = next == labels;
    labels = std::move(next);
    if (stable) break;
    std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<std::int64_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      auto r = rows.row(i);
      for (int d = 0; d < dim; ++d) sums[static_cast<std::size_t>(labels[i]) * dim + d] += r[d];
    }
    for (int j = 0; j < k; ++j) {
      auto row = c.row(j);
      if (counts[j] == 0) {
        // Empty: take the worst-served point.
        const std::size_t far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(rows.row(far).begin(), dim, row.begin());
        dist[far] = 0.0;
      } else {
        std::copy_n(sums.begin() + static_cast<std::ptrdiff_t>(j) * dim, dim, row.begin());
      }
      normalize(row);
    }
  }
  return c;
}

double objective_prefix(const PixelRows& rows, std::size_t n, const Centroids& c) {
  std::vector<double> dist;
  nearest_block(rows.data.data(), n, c, &dist);
  return std::accumulate(dist.begin(), dist.end(), 0.0);
}

void refresh(KMeansState& s, const PixelRows& batch, const std::vector<int>& labels) {
  const int k = s.centroids.k;
  const int dim = s.centroids.dim;
  const int largest = static_cast<int>(std::max_element(s.window.begin(), s.window.end()) - s.window.begin());
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == largest) donors.push_back(i);
  for (int j = 0; j < k; ++j) {
    auto row = s.centroids.row(j);
    double* run = s.running.data() + static_cast<std::size_t>(j) * dim;
    if (s.window[j] == 0 && !donors.empty() && j != largest) {
      const auto src = batch.row(donors[s.rng.below(donors.size())]);
      std::copy(src.begin(), src.end(), run);
      s.counts[j] = 1;
    }
    std::copy_n(run, dim, row.begin());
    normalize(row);
  }
  std::fill(s.window.begin(), s.window.end(), 0);
}

}  // namespace

void PixelRows::append(const Tensor& f) {
  if (dim == 0) dim = f.c;
  if (f.c != dim) throw ConfigError("PixelRows: inconsistent feature dimension");
  const auto rows = to_pixel_rows(f);
  data.insert(data.end(), rows.begin(), rows.end());
}

void KMeansOptions::validate() const {
  if (init_batches < 1 || batch_size < 1 || update_period < 1 || passes < 0 || init_iterations < 1 ||
      init_restarts < 1)
    throw ConfigError("k-means options must be positive");
}

KMeansOptions KMeansOptions::scaled_to(std::size_t n_vectors) const {
  KMeansOptions o = *this;
  const double want = static_cast<double>(init_batches) * batch_size;
  if (n_vectors == 0 || static_cast<double>(n_vectors) >= want) return o;
  const double f = std::sqrt(static_cast<double>(n_vectors) / want);
  o.init_batches = std::max(1, static_cast<int>(std::floor(init_batches * f)));
  o.batch_size = std::max(1, static_cast<int>(n_vectors / o.init_batches));
  return o;
}

int nearest_centroid(std::span<const double> z, const Centroids& c, double* distance) {
  check_dims(static_cast<int>(z.size()), c);
  int best = 0;
  double best_sim = dot(z, c.row(0));
  for (int k = 1; k < c.k; ++k) {
    const double s = dot(z, c.row(k));
    if (s > best_sim) {
      best_sim = s;
      best = k;
    }
  }
  if (distance) *distance = 1.0 - best_sim;
  return best;
}

LabelGrid assign(const Tensor& features, const Centroids& c) {
  check_dims(features.c, c);
  const auto rows = to_pixel_rows(features);
  const auto labels = nearest_block(rows.data(), features.plane(), c, nullptr);
  LabelGrid out(features.h, features.w);
  std::copy(labels.begin(), labels.end(), out.data.begin());
  return out;
}

std::vector<int> assign_rows(const PixelRows& rows, const Centroids& c) {
  check_dims(rows.dim, c);
  return nearest_block(rows.data.data(), rows.count(), c, nullptr);
}

double kmeans_objective(const PixelRows& rows, const Centroids& c) {
  check_dims(rows.dim, c);
  return objective_prefix(rows, rows.count(), c);
}

KMeansState init_centroids(const PixelRows& rows, int k, Rng rng, const KMeansOptions& options) {
  options.validate();
  if (k < 1) throw ConfigError("k-means needs K >= 1");
  const std::size_t n = std::min<std::size_t>(rows.count(),
                                              static_cast<std::size_t>(options.init_batches) * options.batch_size);
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < n && static_cast<int>(distinct.size()) < k; ++i)
    distinct.emplace(rows.row(i).begin(), rows.row(i).end());
  if (static_cast<int>(distinct.size()) < k)
    throw ConfigError("k-means init needs at least " + std::to_string(k) + " distinct vectors, found " +
                      std::to_string(distinct.size()));

  Centroids best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.init_restarts; ++r) {
    Centroids c = lloyd(rows, n, k, rng, options.init_iterations);
    const double obj = objective_prefix(rows, n, c);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(c);
    }
  }

  KMeansState s;
  s.centroids = std::move(best);
  s.running = s.centroids.data;
  s.counts.assign(k, 0);
  s.window.assign(k, 0);
  s.update_period = options.update_period;
  s.rng = rng;
  return s;
}

void minibatch_update(KMeansState& s, const PixelRows& batch) {
  if (batch.count() == 0) return;
  check_dims(batch.dim, s.centroids);
  const int dim = s.centroids.dim;
  const auto labels = nearest_block(batch.data.data(), batch.count(), s.centroids, nullptr);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int j = labels[i];
    const std::int64_t cnt = ++s.counts[j];
    ++s.window[j];
    double* run = s.running.data() + static_cast<std::size_t>(j) * dim;
    const auto x = batch.row(i);
    if (cnt == 1) {
      std::copy(x.begin(), x.end(), run);
    } else {
      const double eta = 1.0 / static_cast<double>(cnt);
      for (int d = 0; d < dim; ++d) run[d] += (x[d] - run[d]) * eta;
    }
  }
  ++s.iteration;
  if (s.iteration % s.update_period == 0) refresh(s, batch, labels);
}

KMeansState fit_minibatch(const PixelRows& rows, int k, Rng rng, const KMeansOptions& options) {
  const KMeansOptions opts = options.scaled_to(rows.count());
  std::vector<std::size_t> order(rows.count());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  PixelRows shuffled{rows.dim, {}};
  shuffled.data.resize(rows.data.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    std::copy_n(rows.row(order[i]).begin(), rows.dim, shuffled.data.begin() + static_cast<std::ptrdiff_t>(i * rows.dim));

  KMeansState state = init_centroids(shuffled, k, rng.fork(), opts);
  PixelRows batch{rows.dim, {}};
  const std::size_t bs = static_cast<std::size_t>(opts.batch_size);
  for (int pass = 0; pass < opts.passes; ++pass) {
    for (std::size_t start = 0; start < shuffled.count(); start += bs) {
      const std::size_t end = std::min(shuffled.count(), start + bs);
      batch.data.assign(shuffled.data.begin() + static_cast<std::ptrdiff_t>(start * rows.dim),
                        shuffled.data.begin() + static_cast<std::ptrdiff_t>(end * rows.dim));
      minibatch_update(state, batch);
    }
  }
  // Fold pending running means in so the returned centroids reflect every batch.
  if (state.iteration % state.update_period != 0) {
    for (int j = 0; j < k; ++j) {
      auto row = state.centroids.row(j);
      std::copy_n(state.running.begin() + static_cast<std::ptrdiff_t>(j) * rows.dim, rows.dim, row.begin());
      normalize(row);
    }
  }
  return state;
}

ClusteringResult cluster_feature_maps(const std::vector<Tensor>& maps, int k, Rng rng,
                                      const KMeansOptions& options) {
  if (maps.empty()) throw ConfigError("no feature maps to cluster");
  PixelRows rows;
  for (const auto& m : maps) rows.append(m);
  KMeansState state = fit_minibatch(rows, k, rng, options);
  ClusteringResult out;
  out.centroids = std::move(state.centroids);
  out.labels.reserve(maps.size());
  for (const auto& m : maps) out.labels.push_back(assign(m, out.centroids));
  return out;
}

std::vector<std::int64_t> PseudoLabelSet::counts(int view) const {
  std::vector<std::int64_t> c(k(), 0);
  for (const auto& e : entries)
    for (auto v : (view == 1 ? e.view1 : e.view2).data) ++c[v];
  return c;
}

TwoViewFeatures two_view_features(const std::vector<ImageSample>& dataset, const Extractor& extractor,
                                  const std::vector<TransformRecord>& records) {
  if (records.size() != dataset.size()) throw ConfigError("one transform record per image required");
  TwoViewFeatures out;
  out.view1.reserve(dataset.size());
  out.view2.reserve(dataset.size());
  const int stride = extractor.config().stride;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    const auto& r = records[i];
    try {
      const Tensor x1 = apply_geometric(apply_photometric(s.image, r.photo1), r.geo, GridKind::kImage);
      out.view1.push_back(extractor.extract(x1, s.id, 1).values);
      const Tensor f2 = extractor.extract(apply_photometric(s.image, r.photo2), s.id, 2).values;
      out.view2.push_back(apply_geometric(f2, r.geo.at_stride(stride), GridKind::kFeatures));
    } catch (const Error& e) {
      throw ConfigError("image " + s.id + ": " + e.what());
    }
  }
  return out;
}

std::vector<PseudoLabelSet> cluster_two_views(const std::vector<ImageSample>& dataset,
                                              const Extractor& extractor, std::span<const int> ks,
                                              Rng& rng, const KMeansOptions& options,
                                              const std::vector<TransformRecord>* records,
                                              const TransformRanges& ranges) {
  if (dataset.empty()) throw ConfigError("cannot cluster an empty dataset");
  std::vector<TransformRecord> recs;
  if (records) {
    recs = *records;
  } else {
    recs.reserve(dataset.size());
    for (const auto& s : dataset) recs.push_back(sample_record(rng, s.image.h, ranges));
  }
  const TwoViewFeatures feats = two_view_features(dataset, extractor, recs);

  std::vector<PseudoLabelSet> out;
  for (int k : ks) {
    // Both views share one k-means seed: identical views give identical clusters.
    const std::uint64_t seed = rng.next_u64();
    ClusteringResult r1 = cluster_feature_maps(feats.view1, k, Rng(seed), options);
    ClusteringResult r2 = cluster_feature_maps(feats.view2, k, Rng(seed), options);
    PseudoLabelSet set;
    set.centroids1 = std::move(r1.centroids);
    set.centroids1.view = 1;
    set.centroids2 = std::move(r2.centroids);
    set.centroids2.view = 2;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      set.entries.push_back({dataset[i].id, std::move(r1.labels[i]), std::move(r2.labels[i]), recs[i]});
    out.push_back(std::move(set));
  }
  return out;
}

void write_centroids(BinaryWriter& w, const Centroids& c) {
  w.i32(c.k);
  w.i32(c.dim);
  w.i32(c.view);
  w.f64s(c.data);
}

Centroids read_centroids(BinaryReader& r) {
  Centroids c;
  c.k = r.i32();
  c.dim = r.i32();
  c.view = r.i32();
  c.data = r.f64s();
  if (c.k < 0 || c.dim < 0 || c.data.size() != static_cast<std::size_t>(c.k) * c.dim)
    throw DataError("corrupt centroid block in " + r.path().string());
  return c;
}

namespace {
void write_grid(BinaryWriter& w, const LabelGrid& g) {
  w.i32(g.h);
  w.i32(g.w);
  w.i32s(g.data);
}
LabelGrid read_grid(BinaryReader& r) {
  LabelGrid g;
  g.h = r.i32();
  g.w = r.i32();
  g.data = r.i32s();
  if (g.h < 0 || g.w < 0 || g.data.size() != static_cast<std::size_t>(g.h) * g.w)
    throw DataError("corrupt label grid in " + r.path().string());
  return g;
}
}  // namespace

void save_pseudo_labels(const std::filesystem::path& path, const PseudoLabelSet& set) {
  BinaryWriter w(path);
  w.magic(kPseudoLabelMagic);
  w.u8(kPseudoLabelVersion);
  w.i32(set.epoch);
  write_centroids(w, set.centroids1);
  write_centroids(w, set.centroids2);
  w.u64(set.entries.size());
  for (const auto& e : set.entries) {
    w.str(e.id);
    const auto flat = e.record.to_flat();
    w.f64s(flat);
    write_grid(w, e.view1);
    write_grid(w, e.view2);
  }
  w.close();
}

PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kPseudoLabelMagic);
  if (const auto v = r.u8(); v != kPseudoLabelVersion)
    throw DataError("unsupported pseudo-label cache version " + std::to_string(v));
  PseudoLabelSet set;
  set.epoch = r.i32();
  set.centroids1 = read_centroids(r);
  set.centroids2 = read_centroids(r);
  const auto n = r.u64();
  if (n > 100'000'000) throw DataError("corrupt entry count in " + path.string());
  set.entries.resize(n);
  for (auto& e : set.entries) {
    e.id = r.str();
    e.record = TransformRecord::from_flat(r.f64s());
    e.view1 = read_grid(r);
    e.view2 = read_grid(r);
  }
  return set;
}

}  // namespace picie
