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

#include "picie/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "linalg.hpp"
#include "picie/errors.hpp"

namespace picie {

using linalg::RowMat;

Gradients zero_gradients(const std::vector<Parameter>& params) {
  Gradients g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) g[i].assign(params[i].value.size(), 0.0);
  return g;
}

namespace ag {
namespace {

// Unfolds k x k patches of a C x H x W tensor into a (C*k*k) x (Ho*Wo) matrix.
void im2col(const Tensor& x, int k, int stride, int pad, int ho, int wo, std::vector<double>& cols) {
  const std::size_t n_out = static_cast<std::size_t>(ho) * wo;
  cols.assign(static_cast<std::size_t>(x.c) * k * k * n_out, 0.0);
  for (int c = 0; c < x.c; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          const double* src = x.data.data() + (static_cast<std::size_t>(c) * x.h + iy) * x.w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < x.w) row[oy * wo + ox] = src[ix];
          }
        }
      }
}

void col2im(const std::vector<double>& cols, int k, int stride, int pad, int ho, int wo, Tensor& dx) {
  const std::size_t n_out = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < dx.c; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= dx.h) continue;
          double* dst = dx.data.data() + (static_cast<std::size_t>(c) * dx.h + iy) * dx.w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < dx.w) dst[ix] += row[oy * wo + ox];
          }
        }
      }
}

}  // namespace

Tape::Tape(const std::vector<Parameter>& params, Gradients* grads, bool record)
    : params_(params), grads_(grads), record_(record && grads != nullptr) {}

int Tape::push(Tensor value, std::function<void()> back) {
  values_.push_back(std::move(value));
  grads_by_node_.emplace_back();
  backward_.push_back(record_ ? std::move(back) : std::function<void()>{});
  return static_cast<int>(values_.size()) - 1;
}

int Tape::constant(Tensor value) { return push(std::move(value), {}); }

Tensor& Tape::grad(int node) {
  Tensor& g = grads_by_node_[node];
  if (g.size() != values_[node].size()) {
    const Tensor& v = values_[node];
    g = Tensor(v.c, v.h, v.w);
  }
  return g;
}

void Tape::seed(int node, const Tensor& g) {
  if (!g.same_shape(values_[node])) throw ConfigError("gradient seed shape mismatch");
  Tensor& dst = grad(node);
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += g.data[i];
}

void Tape::backward() {
  if (!record_) throw ConfigError("backward() on a non-recording tape");
  for (int n = static_cast<int>(values_.size()) - 1; n >= 0; --n) {
    if (backward_[n] && grads_by_node_[n].size() == values_[n].size()) backward_[n]();
  }
}

int Tape::conv2d(int x, int weight, int bias, int stride, int pad) {
  const Parameter& wp = params_[weight];
  if (wp.shape.size() != 4) throw ConfigError("conv weight must be 4-d: " + wp.name);
  const int cout = wp.shape[0], cin = wp.shape[1], k = wp.shape[2];
  const Tensor& in = values_[x];
  if (in.c != cin) throw ConfigError("conv input channels mismatch for " + wp.name);
  const int ho = (in.h + 2 * pad - k) / stride + 1;
  const int wo = (in.w + 2 * pad - k) / stride + 1;
  const int n_out = ho * wo;
  const bool pointwise = k == 1 && stride == 1 && pad == 0;

  auto cols = std::make_shared<RowMat>();
  if (pointwise) {
    *cols = linalg::owned(in.data.data(), cin, n_out);
  } else {
    std::vector<double> buf;
    im2col(in, k, stride, pad, ho, wo, buf);
    *cols = linalg::owned(buf.data(), static_cast<Eigen::Index>(cin) * k * k, n_out);
  }

  Tensor out(cout, ho, wo);
  const RowMat wmat = linalg::owned(wp.value.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  RowMat omat = wmat * *cols;
  if (bias >= 0) {
    const auto& b = params_[bias].value;
    for (int o = 0; o < cout; ++o) omat.row(o).array() += b[o];
  }
  linalg::copy_to(omat, out.data.data());

  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, x, weight, bias, stride, pad, k, cin, cout, ho, wo,
                               n_out, pointwise, cols]() {
    const Tensor& gout = grads_by_node_[node];
    const RowMat gmat = linalg::owned(gout.data.data(), cout, n_out);
    linalg::add_to(gmat * cols->transpose(), param_grad(weight).data());
    if (bias >= 0) {
      auto& db = param_grad(bias);
      for (int o = 0; o < cout; ++o) db[o] += linalg::row_sum(gmat, o);
    }
    const RowMat wmat =
        linalg::owned(params_[weight].value.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
    Tensor& gx = grad(x);
    const RowMat dcm = wmat.transpose() * gmat;
    if (pointwise) {
      linalg::add_to(dcm, gx.data.data());
    } else {
      std::vector<double> dcols(dcm.size());
      linalg::copy_to(dcm, dcols.data());
      col2im(dcols, k, stride, pad, ho, wo, gx);
    }
  });
}

int Tape::relu(int x) {
  Tensor out = values_[x];
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, x]() {
    const Tensor& g = grads_by_node_[node];
    const Tensor& in = values_[x];
    Tensor& gx = grad(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in.data[i] > 0.0) gx.data[i] += g.data[i];
  });
}

int Tape::add(int a, int b) {
  if (!values_[a].same_shape(values_[b])) throw ConfigError("add: shape mismatch");
  Tensor out = values_[a];
  const Tensor& vb = values_[b];
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, a, b]() {
    const Tensor& g = grads_by_node_[node];
    Tensor& ga = grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    Tensor& gb = grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
  });
}

int Tape::max_pool(int x, int kernel, int stride, int pad) {
  const Tensor& in = values_[x];
  const int ho = (in.h + 2 * pad - kernel) / stride + 1;
  const int wo = (in.w + 2 * pad - kernel) / stride + 1;
  Tensor out(in.c, ho, wo);
  auto argmax = std::make_shared<std::vector<int>>(out.size(), -1);
  for (int c = 0; c < in.c; ++c)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int ky = 0; ky < kernel; ++ky)
          for (int kx = 0; kx < kernel; ++kx) {
            const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
            const int idx = (c * in.h + iy) * in.w + ix;
            if (in.data[idx] > best) {
              best = in.data[idx];
              best_idx = idx;
            }
          }
        const int o = (c * ho + oy) * wo + ox;
        out.data[o] = best;
        (*argmax)[o] = best_idx;
      }
  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, x, argmax]() {
    const Tensor& g = grads_by_node_[node];
    Tensor& gx = grad(x);
    for (std::size_t o = 0; o < g.size(); ++o)
      if ((*argmax)[o] >= 0) gx.data[(*argmax)[o]] += g.data[o];
  });
}

int Tape::resample(int x, const Box& box, int out_h, int out_w, bool flip) {
  const Tensor& in = values_[x];
  auto ty = std::make_shared<AxisTaps>(bilinear_taps(in.h, box.y0, box.y1, out_h, false));
  auto tx = std::make_shared<AxisTaps>(bilinear_taps(in.w, box.x0, box.x1, out_w, flip));
  Tensor out = sample_bilinear(in, box, out_h, out_w, flip);
  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, x, ty, tx, out_h, out_w]() {
    const Tensor& g = grads_by_node_[node];
    Tensor& gx = grad(x);
    for (int c = 0; c < gx.c; ++c) {
      const double* gp = g.data.data() + c * g.plane();
      double* dst = gx.data.data() + c * gx.plane();
      for (int i = 0; i < out_h; ++i) {
        const double fy = ty->frac[i];
        double* r0 = dst + static_cast<std::size_t>(ty->lo[i]) * gx.w;
        double* r1 = dst + static_cast<std::size_t>(ty->hi[i]) * gx.w;
        for (int j = 0; j < out_w; ++j) {
          const double v = gp[i * out_w + j];
          const double fx = tx->frac[j];
          r0[tx->lo[j]] += v * (1.0 - fy) * (1.0 - fx);
          r0[tx->hi[j]] += v * (1.0 - fy) * fx;
          r1[tx->lo[j]] += v * fy * (1.0 - fx);
          r1[tx->hi[j]] += v * fy * fx;
        }
      }
    }
  });
}

int Tape::l2_normalize(int x, double eps) {
  const Tensor& in = values_[x];
  Tensor out(in.c, in.h, in.w);
  const std::size_t n = in.plane();
  auto inv_norm = std::make_shared<std::vector<double>>(n);
  for (std::size_t p = 0; p < n; ++p) {
    double ss = 0.0;
    for (int c = 0; c < in.c; ++c) ss += in.data[c * n + p] * in.data[c * n + p];
    const double inv = 1.0 / std::sqrt(ss + eps);
    (*inv_norm)[p] = inv;
    for (int c = 0; c < in.c; ++c) out.data[c * n + p] = in.data[c * n + p] * inv;
  }
  const int node = static_cast<int>(values_.size());
  return push(std::move(out), [this, node, x, inv_norm]() {
    const Tensor& g = grads_by_node_[node];
    const Tensor& y = values_[node];
    Tensor& gx = grad(x);
    const std::size_t n = y.plane();
    for (std::size_t p = 0; p < n; ++p) {
      double dot = 0.0;
      for (int c = 0; c < y.c; ++c) dot += y.data[c * n + p] * g.data[c * n + p];
      const double inv = (*inv_norm)[p];
      for (int c = 0; c < y.c; ++c)
        gx.data[c * n + p] += (g.data[c * n + p] - y.data[c * n + p] * dot) * inv;
    }
  });
}

}  // namespace ag
}  // namespace picie
