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

#include "picie/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "linalg.hpp"
#include "picie/errors.hpp"

namespace picie {

using linalg::RowMat;

void Centroids::check_invariants(double tol) const {
  if (k < 1) throw NumericalError("centroid matrix has no rows");
  for (int i = 0; i < k; ++i) {
    double ss = 0.0;
    for (double v : row(i)) {
      if (!std::isfinite(v)) throw NumericalError("centroid " + std::to_string(i) + " is not finite");
      ss += v * v;
    }
    if (std::abs(std::sqrt(ss) - 1.0) > tol)
      throw NumericalError("centroid " + std::to_string(i) + " is not unit-norm");
  }
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("cosine_distance: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw NumericalError("cosine_distance: non-finite input");
    dot += a[i] * b[i];
  }
  return 1.0 - dot;
}

namespace {

void check_label(int y, int k) {
  if (y < 0 || y >= k)
    throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
}

void check_weights(const ClusterWeights& w, int k) {
  if (static_cast<int>(w.w.size()) != k) throw ConfigError("cluster weight count differs from K");
}

}  // namespace

double l_clust(std::span<const double> z, int y, const Centroids& c, const ClusterWeights& w,
               std::span<double> dz, double scale) {
  if (static_cast<int>(z.size()) != c.dim) throw ConfigError("l_clust: dimension mismatch");
  check_label(y, c.k);
  check_weights(w, c.k);
  std::vector<double> logits(c.k);
  for (int l = 0; l < c.k; ++l) logits[l] = -cosine_distance(z, c.row(l));
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  const double loss = w.w[y] * (lse - logits[y]);
  if (!dz.empty()) {
    // d/dz of w_y * (lse(-d) + d_y) with d_l = 1 - z.mu_l
    for (int l = 0; l < c.k; ++l) {
      double g = std::exp(logits[l] - lse);
      if (l == y) g -= 1.0;
      g *= scale * w.w[y];
      const auto mu = c.row(l);
      for (int i = 0; i < c.dim; ++i) dz[i] += g * mu[i];
    }
  }
  return loss;
}

double l_clust_map(const Tensor& z, const LabelGrid& y, const Centroids& c, const ClusterWeights& w,
                   Tensor* dz, double scale) {
  if (z.c != c.dim) throw ConfigError("l_clust_map: feature dim differs from centroid dim");
  if (z.h != y.h || z.w != y.w) throw ConfigError("l_clust_map: label grid shape mismatch");
  check_weights(w, c.k);
  const int n = static_cast<int>(z.plane());
  const RowMat zmat = linalg::owned(z.data.data(), z.c, n);
  const RowMat cmat = linalg::owned(c.data.data(), c.k, c.dim);
  RowMat sims = cmat * zmat;  // K x P, logits = sims - 1

  double total = 0.0;
  RowMat g;
  if (dz) g.setZero(c.k, n);
  const double inv_n = 1.0 / n;
  for (int p = 0; p < n; ++p) {
    const int lbl = y.data[p];
    check_label(lbl, c.k);
    const double mx = sims.col(p).maxCoeff();
    double sum = 0.0;
    for (int l = 0; l < c.k; ++l) sum += std::exp(sims(l, p) - mx);
    const double lse = mx + std::log(sum);
    const double wy = w.w[lbl];
    total += wy * (lse - sims(lbl, p));
    if (dz) {
      const double s = scale * inv_n * wy;
      for (int l = 0; l < c.k; ++l) g(l, p) = s * std::exp(sims(l, p) - lse);
      g(lbl, p) -= s;
    }
  }
  if (dz) {
    if (!dz->same_shape(z)) throw ConfigError("l_clust_map: gradient buffer shape mismatch");
    linalg::add_to(cmat.transpose() * g, dz->data.data());
  }
  return total * inv_n;
}

WithinCross within_and_cross(const Tensor& z1, const Tensor& z2, const LabelGrid& y1,
                             const LabelGrid& y2, const Centroids& c1, const Centroids& c2,
                             const ClusterWeights& w1, const ClusterWeights& w2, Tensor* dz1,
                             Tensor* dz2, WithinCrossScales scales) {
  if (!z1.same_shape(z2)) throw ConfigError("within_and_cross: view shapes differ");
  if (y1.h != y2.h || y1.w != y2.w) throw ConfigError("within_and_cross: label grid shapes differ");
  WithinCross out;
  out.within = l_clust_map(z1, y1, c1, w1, dz1, scales.within) +
               l_clust_map(z2, y2, c2, w2, dz2, scales.within);
  out.cross = l_clust_map(z1, y2, c2, w2, dz1, scales.cross) +
              l_clust_map(z2, y1, c1, w1, dz2, scales.cross);
  return out;
}

double total_loss(double within, double cross) {
  if (!std::isfinite(within) || !std::isfinite(cross))
    throw NumericalError("total_loss: non-finite input");
  return (within + cross) / 2.0;
}

BalanceCoefficients balance(int k1, int k2) {
  if (k1 <= 1 || k2 <= 1) throw ConfigError("balance: cluster counts must be at least 2");
  const double l1 = std::log(static_cast<double>(k1));
  const double l2 = std::log(static_cast<double>(k2));
  BalanceCoefficients b;
  b.k1 = l2 / (l1 + l2);
  b.k2 = 1.0 - b.k1;
  return b;
}

ClusterWeights cluster_size_weights(std::span<const std::int64_t> counts, std::int64_t n_total) {
  ClusterWeights w;
  const double k = static_cast<double>(counts.size());
  w.w.reserve(counts.size());
  for (auto n : counts)
    w.w.push_back(static_cast<double>(n_total) / (k * static_cast<double>(std::max<std::int64_t>(n, 1))));
  return w;
}

double parametric_ce(std::span<const double> scores, int y, std::span<double> dscores, double scale,
                     double weight) {
  const int k = static_cast<int>(scores.size());
  check_label(y, k);
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  const double lse = mx + std::log(sum);
  if (!dscores.empty()) {
    for (int l = 0; l < k; ++l) {
      double g = std::exp(scores[l] - lse);
      if (l == y) g -= 1.0;
      dscores[l] += scale * weight * g;
    }
  }
  return weight * (lse - scores[y]);
}

double parametric_ce_map(const Tensor& scores, const LabelGrid& y, const ClusterWeights& w,
                         Tensor* dscores, double scale) {
  if (scores.h != y.h || scores.w != y.w) throw ConfigError("parametric_ce_map: shape mismatch");
  check_weights(w, scores.c);
  const std::size_t n = scores.plane();
  std::vector<double> s(scores.c), g(scores.c);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    for (int l = 0; l < scores.c; ++l) s[l] = scores.data[l * n + p];
    std::fill(g.begin(), g.end(), 0.0);
    const int lbl = y.data[p];
    total += parametric_ce(s, lbl, dscores ? std::span<double>(g) : std::span<double>{},
                           scale / static_cast<double>(n), w.w.at(lbl));
    if (dscores)
      for (int l = 0; l < scores.c; ++l) dscores->data[l * n + p] += g[l];
  }
  return total / static_cast<double>(n);
}

double mse_cross_view(const Tensor& z1, const Tensor& z2, Tensor* dz1, Tensor* dz2, double scale) {
  if (!z1.same_shape(z2)) throw ConfigError("mse_cross_view: shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(z1.plane());
  double total = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    const double d = z1.data[i] - z2.data[i];
    total += d * d;
    if (dz1) dz1->data[i] += scale * inv_n * 2.0 * d;
    if (dz2) dz2->data[i] -= scale * inv_n * 2.0 * d;
  }
  return total * inv_n;
}

}  // namespace picie
