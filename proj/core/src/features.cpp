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

#include "picie/features.hpp"

#include <cmath>
#include <map>

#include "picie/binary_io.hpp"
#include "picie/errors.hpp"
#include "picie/rng.hpp"

namespace picie {

namespace {

// ImageNet channel statistics.
constexpr double kChannelMean[3] = {0.485, 0.456, 0.406};
constexpr double kChannelStd[3] = {0.229, 0.224, 0.225};

Tensor standardize(const Tensor& image) {
  Tensor out = image;
  const std::size_t n = out.plane();
  for (int c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < n; ++p) out.data[c * n + p] = (out.data[c * n + p] - kChannelMean[c]) / kChannelStd[c];
  return out;
}

}  // namespace

const char* to_string(BackboneKind kind) {
  return kind == BackboneKind::kTiny ? "tiny" : "resnet18";
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "tiny") return BackboneKind::kTiny;
  if (s == "resnet18") return BackboneKind::kResNet18;
  throw ConfigError("unknown backbone '" + s + "' (expected tiny or resnet18)");
}

void ExtractorConfig::validate() const {
  if (dim <= 0) throw ConfigError("feature dim must be positive");
  if (stride != 2 && stride != 4 && stride != 8)
    throw ConfigError("output stride must be 2, 4 or 8");
  if (backbone == BackboneKind::kResNet18 && stride == 2)
    throw ConfigError("resnet18 backbone supports output stride 4 or 8");
}

Extractor::Extractor(ExtractorConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  build(init_seed, true);
  if (config_.pretrained) load_weights(*config_.pretrained);
}

Extractor::Extractor(ExtractorConfig config, std::vector<Parameter> params)
    : config_(std::move(config)) {
  config_.validate();
  build(0, false);
  if (params.size() != params_.size())
    throw DataError("parameter count mismatch: expected " + std::to_string(params_.size()) +
                    ", got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != params_[i].name || params[i].shape != params_[i].shape)
      throw DataError("parameter mismatch at '" + params_[i].name + "'");
    params_[i].value = std::move(params[i].value);
  }
}

std::size_t Extractor::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

int Extractor::add_conv(const std::string& name, int cout, int cin, int k, int stride, int pad,
                        bool init, Rng* rng) {
  (void)stride;
  (void)pad;
  Parameter w{name + ".weight", {cout, cin, k, k}, std::vector<double>(std::size_t(cout) * cin * k * k)};
  Parameter b{name + ".bias", {cout}, std::vector<double>(cout, 0.0)};
  if (init) {
    const double std_dev = std::sqrt(2.0 / (cin * k * k));
    for (auto& v : w.value) v = std_dev * rng->normal();
  }
  params_.push_back(std::move(w));
  params_.push_back(std::move(b));
  return static_cast<int>(params_.size()) - 2;
}

void Extractor::build(std::uint64_t seed, bool init) {
  Rng rng(seed);
  params_.clear();
  std::vector<int> level_channels;
  auto conv = [&](const std::string& name, int cout, int cin, int k, int stride, int pad) {
    const int w = add_conv(name, cout, cin, k, stride, pad, init, &rng);
    return ConvSpec{w, w + 1, stride, pad};
  };

  if (config_.backbone == BackboneKind::kTiny) {
    const int channels[] = {16, 32, 64, 64};
    int cin = 3;
    for (int s = 0; s < 4; ++s) {
      // 4x4 stride-2 windows are centered on their 2x2 output block.
      stem_.push_back(conv("stage" + std::to_string(s + 1), channels[s], cin, 4, 2, 1));
      level_strides_.push_back(2 << s);
      level_channels.push_back(channels[s]);
      cin = channels[s];
    }
  } else {
    stem_.push_back(conv("stem", 64, 3, 7, 2, 3));
    const int channels[] = {64, 128, 256, 512};
    int cin = 64;
    for (int s = 0; s < 4; ++s) {
      std::vector<Block> blocks;
      for (int b = 0; b < 2; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        const std::string name = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
        Block blk{conv(name + ".conv1", channels[s], cin, 3, stride, 1),
                  conv(name + ".conv2", channels[s], channels[s], 3, 1, 1), std::nullopt};
        if (stride != 1 || cin != channels[s])
          blk.shortcut = conv(name + ".shortcut", channels[s], cin, 1, stride, 0);
        blocks.push_back(blk);
        cin = channels[s];
      }
      stages_.push_back(std::move(blocks));
      level_strides_.push_back(4 << s);
      level_channels.push_back(channels[s]);
    }
  }

  for (std::size_t l = 0; l < level_strides_.size(); ++l) {
    if (level_strides_[l] < config_.stride) continue;
    used_levels_.push_back(static_cast<int>(l));
    laterals_.push_back(conv("lateral" + std::to_string(l + 1), config_.dim, level_channels[l], 1, 1, 0));
  }
  if (used_levels_.size() < 2) throw ConfigError("pyramid needs at least two levels");
}

void Extractor::check_input(const Tensor& image) const {
  if (image.c != 3) throw ConfigError("extractor expects a 3-channel image");
  if (image.h % config_.stride != 0 || image.w % config_.stride != 0)
    throw ConfigError("input side " + std::to_string(image.h) + "x" + std::to_string(image.w) +
                      " is not divisible by output stride " + std::to_string(config_.stride));
}

int Extractor::run_conv(ag::Tape& tape, int x, const ConvSpec& c) const {
  return tape.conv2d(x, c.weight, c.bias, c.stride, c.pad);
}

int Extractor::forward(ag::Tape& tape, int image_node) const {
  const Tensor& image = tape.value(image_node);
  check_input(image);
  const int out_h = image.h / config_.stride;
  const int out_w = image.w / config_.stride;

  // Images are constants on the tape; no gradient flows back to them.
  const int input = tape.constant(standardize(image));
  std::vector<int> levels;
  if (config_.backbone == BackboneKind::kTiny) {
    int x = input;
    for (const auto& c : stem_) {
      x = tape.relu(run_conv(tape, x, c));
      levels.push_back(x);
    }
  } else {
    int x = tape.relu(run_conv(tape, input, stem_[0]));
    x = tape.max_pool(x, 3, 2, 1);
    for (const auto& stage : stages_) {
      for (const auto& blk : stage) {
        int y = tape.relu(run_conv(tape, x, blk.conv1));
        y = run_conv(tape, y, blk.conv2);
        const int skip = blk.shortcut ? run_conv(tape, x, *blk.shortcut) : x;
        x = tape.relu(tape.add(y, skip));
      }
      levels.push_back(x);
    }
  }

  int fused = -1;
  for (std::size_t i = 0; i < used_levels_.size(); ++i) {
    int proj = run_conv(tape, levels[used_levels_[i]], laterals_[i]);
    const Tensor& pv = tape.value(proj);
    if (pv.h != out_h || pv.w != out_w) proj = tape.resize(proj, out_h, out_w);
    fused = fused < 0 ? proj : tape.add(fused, proj);
  }
  return tape.l2_normalize(fused, 1e-12);
}

FeatureMap Extractor::extract(const Tensor& image, const std::string& id, int view) const {
  check_input(image);
  ag::Tape tape(params_, nullptr, false);
  const int in = tape.constant(image);
  const int out = forward(tape, in);
  return FeatureMap{tape.value(out), id, view};
}

void Extractor::load_weights(const std::filesystem::path& path) {
  const auto arrays = read_named_arrays(path);
  std::map<std::string, const Parameter*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  std::size_t loaded = 0;
  for (auto& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) continue;
    if (it->second->shape != p.shape)
      throw DataError("pretrained weight '" + p.name + "' has incompatible shape");
    p.value = it->second->value;
    ++loaded;
  }
  if (loaded == 0) throw DataError("no parameters matched in " + path.string());
}

LossAndGradient gradient_of_loss(const Extractor& extractor, std::span<const Tensor> inputs,
                                 const FeatureLoss& loss, std::span<const std::string> ids) {
  LossAndGradient out;
  out.grads = zero_gradients(extractor.parameters());
  ag::Tape tape(extractor.parameters(), &out.grads, true);
  std::vector<int> feats;
  feats.reserve(inputs.size());
  for (const auto& img : inputs) feats.push_back(extractor.forward(tape, tape.constant(img)));
  out.loss = loss(tape, feats);
  if (!std::isfinite(out.loss)) {
    std::string who;
    for (const auto& id : ids) who += (who.empty() ? "" : ", ") + id;
    throw NumericalError("non-finite loss for images [" + who + "]");
  }
  tape.backward();
  return out;
}

}  // namespace picie
