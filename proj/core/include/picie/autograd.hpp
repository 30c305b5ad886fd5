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

#include <functional>
#include <string>
#include <vector>

#include "picie/grid_ops.hpp"
#include "picie/tensor.hpp"

namespace picie {

// Named trainable array. Convolution weights are laid out
// [out][in][kh][kw], biases [out].
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;

  bool operator==(const Parameter&) const = default;
};

// Gradient buffers aligned index-for-index with a parameter list.
using Gradients = std::vector<std::vector<double>>;
Gradients zero_gradients(const std::vector<Parameter>& params);

namespace ag {

// Reverse-mode tape over Tensor-valued nodes. Nodes are identified by
// index; parameter gradients accumulate into the Gradients buffer passed at
// construction. A tape built with record = false only evaluates.
class Tape {
 public:
  Tape(const std::vector<Parameter>& params, Gradients* grads, bool record = true);

  int constant(Tensor value);
  const Tensor& value(int node) const { return values_[node]; }
  Tensor& grad(int node);
  bool recording() const { return record_; }

  // Adds `g` to the gradient of `node`; call before backward().
  void seed(int node, const Tensor& g);
  void backward();

  int conv2d(int x, int weight, int bias, int stride, int pad);
  int relu(int x);
  int add(int a, int b);
  int max_pool(int x, int kernel, int stride, int pad);
  // Bilinear resample of `box` (normalized) to out_h x out_w, optional mirror.
  int resample(int x, const Box& box, int out_h, int out_w, bool flip = false);
  int resize(int x, int out_h, int out_w) { return resample(x, Box{}, out_h, out_w); }
  // Per-pixel L2 normalization across channels: y = x / sqrt(|x|^2 + eps).
  int l2_normalize(int x, double eps = 1e-12);

  const std::vector<Parameter>& params() const { return params_; }

 private:
  int push(Tensor value, std::function<void()> back);
  std::vector<double>& param_grad(int index) { return (*grads_)[index]; }

  const std::vector<Parameter>& params_;
  Gradients* grads_;
  bool record_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_by_node_;
  std::vector<std::function<void()>> backward_;
};

}  // namespace ag
}  // namespace picie
