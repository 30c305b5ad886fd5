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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picie/autograd.hpp"
#include "picie/rng.hpp"
#include "picie/tensor.hpp"

namespace picie {

enum class BackboneKind { kTiny, kResNet18 };

const char* to_string(BackboneKind kind);
BackboneKind backbone_from_string(const std::string& s);

struct ExtractorConfig {
  BackboneKind backbone = BackboneKind::kTiny;
  int dim = 128;     // fused feature dimension
  int stride = 4;    // output stride of the fused map
  std::optional<std::filesystem::path> pretrained;

  void validate() const;
  bool operator==(const ExtractorConfig&) const = default;
};

// Unit-norm per-pixel embeddings, dim x (H / stride) x (W / stride).
struct FeatureMap {
  Tensor values;
  std::string image_id;
  int view = 1;
};

// Multi-scale convolutional backbone with a lightweight pyramid head: every
// pyramid level is projected to `dim` channels by a 1x1 convolution,
// bilinearly upsampled to the output stride and summed; the fused map is L2
// normalized per pixel. There is no 3x3 smoothing after fusion.
class Extractor {
 public:
  Extractor(ExtractorConfig config, std::uint64_t init_seed);
  Extractor(ExtractorConfig config, std::vector<Parameter> params);

  const ExtractorConfig& config() const { return config_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  std::size_t parameter_count() const;

  // Throws ConfigError unless the image side is divisible by the stride.
  void check_input(const Tensor& image) const;

  // Evaluation-mode forward pass.
  FeatureMap extract(const Tensor& image, const std::string& id = {}, int view = 1) const;

  // Records the forward pass on `tape`; returns the node of the normalized map.
  int forward(ag::Tape& tape, int image_node) const;

  // Replaces matching parameters from a named-array file.
  void load_weights(const std::filesystem::path& path);

 private:
  struct ConvSpec {
    int weight;
    int bias;
    int stride;
    int pad;
  };
  struct Block {
    ConvSpec conv1, conv2;
    std::optional<ConvSpec> shortcut;
  };

  void build(std::uint64_t seed, bool init);
  int add_conv(const std::string& name, int cout, int cin, int k, int stride, int pad,
               bool init, Rng* rng);
  int run_conv(ag::Tape& tape, int x, const ConvSpec& c) const;

  ExtractorConfig config_;
  std::vector<Parameter> params_;
  std::vector<ConvSpec> stem_;               // tiny: one conv per stage
  std::vector<std::vector<Block>> stages_;   // resnet: residual stages
  std::vector<int> level_strides_;           // stride of each backbone stage
  std::vector<ConvSpec> laterals_;           // one 1x1 projection per used level
  std::vector<int> used_levels_;
};

// Differentiable loss over feature maps: receives the tape and the feature
// node of every input, seeds dL/dnode on the tape and returns L.
using FeatureLoss = std::function<double(ag::Tape&, std::span<const int>)>;

struct LossAndGradient {
  double loss = 0.0;
  Gradients grads;
};

// Forward over `inputs`, evaluates `loss`, back-propagates to the extractor
// parameters. A non-finite loss raises NumericalError naming `ids`.
LossAndGradient gradient_of_loss(const Extractor& extractor, std::span<const Tensor> inputs,
                                 const FeatureLoss& loss, std::span<const std::string> ids = {});

}  // namespace picie
