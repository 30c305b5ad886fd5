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

#include "picie/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "picie/color.hpp"
#include "picie/errors.hpp"
#include "picie/grid_ops.hpp"
#include "picie/image_io.hpp"
#include "picie/rng.hpp"

namespace picie {
namespace fs = std::filesystem;

namespace {

std::pair<int, int> shorter_side_dims(int h, int w, int resolution) {
  if (h <= w) {
    const int nw = std::max(resolution, static_cast<int>(std::lround(double(w) * resolution / h)));
    return {resolution, nw};
  }
  const int nh = std::max(resolution, static_cast<int>(std::lround(double(h) * resolution / w)));
  return {nh, resolution};
}

std::optional<fs::path> find_with_stem(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".pgm", ".ppm"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

ImageSample preprocess(ImageSample sample, int resolution) {
  if (resolution <= 0) throw ConfigError("resolution must be positive");
  const int h = sample.image.h;
  const int w = sample.image.w;
  if (sample.labels && (sample.labels->h != h || sample.labels->w != w))
    throw DataError("image/label size mismatch for " + sample.id);
  if (h == resolution && w == resolution) return sample;

  const auto [nh, nw] = shorter_side_dims(h, w, resolution);
  const int top = (nh - resolution) / 2;
  const int left = (nw - resolution) / 2;
  sample.image = crop(resize_bilinear(sample.image, nh, nw), top, left, resolution, resolution);
  if (sample.labels)
    sample.labels = crop(resize_nearest(*sample.labels, nh, nw), top, left, resolution, resolution);
  return sample;
}

LabelGrid remap_labels(const LabelGrid& labels, const DatasetManifest& manifest) {
  LabelGrid out(labels.h, labels.w);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::int32_t v = labels.data[i];
    if (manifest.label_remap) {
      auto it = manifest.label_remap->find(v);
      v = it == manifest.label_remap->end() ? manifest.ignore_value : it->second;
    }
    if (v != manifest.ignore_value && (v < 0 || v >= manifest.n_classes)) v = manifest.ignore_value;
    out.data[i] = v;
  }
  return out;
}

std::map<std::int32_t, std::int32_t> read_remap_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label remap table " + path.string());
  std::map<std::int32_t, std::int32_t> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::int32_t from, to;
    if (!(ls >> from)) continue;
    if (!(ls >> to))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected '<from> <to>'");
    table[from] = to;
  }
  return table;
}

LoadResult load_and_preprocess(const DatasetManifest& manifest) {
  if (manifest.resolution <= 0) throw ConfigError("resolution must be positive");
  const fs::path split_dir = manifest.root / manifest.split;
  const fs::path image_dir = split_dir / "images";
  const fs::path label_dir = split_dir / "labels";
  if (!fs::is_directory(image_dir))
    throw DataError("image directory not found: " + image_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm"))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });

  LoadResult result;
  const bool has_labels = fs::is_directory(label_dir);
  for (const auto& file : files) {
    ImageSample sample;
    sample.id = file.stem().string();
    sample.ignore_value = manifest.ignore_value;
    try {
      sample.image = read_image(file);
      if (has_labels) {
        auto label_path = find_with_stem(label_dir, sample.id);
        if (!label_path) throw DataError("no label map for " + sample.id);
        sample.labels = read_label_map(*label_path);
      }
    } catch (const DataError& e) {
      result.errors.push_back({sample.id, e.what()});
      continue;
    }
    sample = preprocess(std::move(sample), manifest.resolution);
    if (sample.labels) sample.labels = remap_labels(*sample.labels, manifest);
    result.samples.push_back(std::move(sample));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic dataset

const std::vector<ClassStyle>& synthetic_vocabulary() {
  static const std::vector<ClassStyle> vocab = {
      {ShapeKind::kRectangle, TextureKind::kHorizontalStripes, {0.85, 0.30, 0.25}},
      {ShapeKind::kDisk, TextureKind::kVerticalStripes, {0.25, 0.75, 0.30}},
      {ShapeKind::kRectangle, TextureKind::kChecker, {0.25, 0.35, 0.85}},
      {ShapeKind::kDisk, TextureKind::kDots, {0.85, 0.80, 0.25}},
      {ShapeKind::kStripeBand, TextureKind::kDiagonal, {0.75, 0.30, 0.80}},
      {ShapeKind::kStripeBand, TextureKind::kFlat, {0.30, 0.80, 0.80}},
  };
  return vocab;
}

namespace {

double texture_value(TextureKind kind, int x, int y, int phase, int period) {
  const int px = x + phase;
  const int py = y + phase;
  switch (kind) {
    case TextureKind::kHorizontalStripes:
      return (py % period) < period / 2 ? 1.0 : 0.0;
    case TextureKind::kVerticalStripes:
      return (px % period) < period / 2 ? 1.0 : 0.0;
    case TextureKind::kChecker:
      return ((px / (period / 2)) + (py / (period / 2))) % 2 == 0 ? 1.0 : 0.0;
    case TextureKind::kDots:
      return (px % period) < period / 2 && (py % period) < period / 2 ? 1.0 : 0.0;
    case TextureKind::kDiagonal:
      return ((px + py) % period) < period / 2 ? 1.0 : 0.0;
    case TextureKind::kFlat:
      return 0.5;
  }
  return 0.0;
}

bool inside_shape(ShapeKind kind, int x, int y, double cx, double cy, double half, bool vertical) {
  const double dx = x + 0.5 - cx;
  const double dy = y + 0.5 - cy;
  switch (kind) {
    case ShapeKind::kRectangle:
      return std::abs(dx) <= half && std::abs(dy) <= half * 0.75;
    case ShapeKind::kDisk:
      return dx * dx + dy * dy <= half * half;
    case ShapeKind::kStripeBand:
      return vertical ? std::abs(dx) <= half * 0.5 : std::abs(dy) <= half * 0.5;
  }
  return false;
}

void apply_nuisance(Tensor& img, double brightness, double contrast, double hue_shift,
                    double noise_sigma, Rng& rng) {
  const std::size_t n = img.plane();
  double mean = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    mean += luma(img.data[p], img.data[n + p], img.data[2 * n + p]);
  mean /= static_cast<double>(n);
  for (std::size_t p = 0; p < n; ++p) {
    double r = img.data[p], g = img.data[n + p], b = img.data[2 * n + p];
    Hsv hsv = rgb_to_hsv(r, g, b);
    hsv.h = hsv.h + hue_shift;
    hsv.h -= std::floor(hsv.h);
    hsv_to_rgb(hsv, r, g, b);
    double rgb[3] = {r, g, b};
    for (int ch = 0; ch < 3; ++ch) {
      double v = rgb[ch] * brightness;
      v = (v - mean * brightness) * contrast + mean * brightness;
      v += noise_sigma * rng.normal();
      img.data[ch * n + p] = std::clamp(v, 0.0, 1.0);
    }
  }
}

}  // namespace

std::vector<ImageSample> generate_synthetic(const SyntheticSpec& spec) {
  const auto& vocab = synthetic_vocabulary();
  if (spec.n_classes < 1 || spec.n_classes > static_cast<int>(vocab.size()))
    throw ConfigError("synthetic n_classes must be in [1, " + std::to_string(vocab.size()) +
                      "], got " + std::to_string(spec.n_classes));
  if (spec.n_images < 1 || spec.side < 8) throw ConfigError("synthetic dataset too small");
  if (spec.texture_period < 2 || spec.texture_period % 2 != 0)
    throw ConfigError("synthetic texture period must be an even number >= 2");
  if (spec.min_objects < 0 || spec.max_objects < spec.min_objects)
    throw ConfigError("synthetic object count range invalid");

  Rng rng(spec.seed);
  std::vector<ImageSample> out;
  out.reserve(spec.n_images);
  const int side = spec.side;
  const int width = std::max(4, static_cast<int>(std::to_string(spec.n_images - 1).size()));

  for (int i = 0; i < spec.n_images; ++i) {
    ImageSample s;
    std::string num = std::to_string(i);
    s.id = "syn_" + std::string(width - num.size(), '0') + num;
    s.image = Tensor(3, side, side);
    s.labels = LabelGrid(side, side);

    const int background = static_cast<int>(rng.below(spec.n_classes));
    s.labels->data.assign(s.labels->size(), background);
    std::vector<int> phase(spec.n_classes);
    for (auto& p : phase) p = static_cast<int>(rng.below(12));

    const int n_obj = spec.min_objects +
                      static_cast<int>(rng.below(spec.max_objects - spec.min_objects + 1));
    for (int o = 0; o < n_obj && spec.n_classes > 1; ++o) {
      int cls = static_cast<int>(rng.below(spec.n_classes - 1));
      if (cls >= background) ++cls;
      const double half = side * rng.uniform(0.15, 0.3);
      const double cx = rng.uniform(0.15, 0.85) * side;
      const double cy = rng.uniform(0.15, 0.85) * side;
      const bool vertical = rng.bernoulli(0.5);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          if (inside_shape(vocab[cls].shape, x, y, cx, cy, half, vertical))
            s.labels->at(y, x) = cls;
    }

    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const int cls = s.labels->at(y, x);
        const double t = texture_value(vocab[cls].texture, x, y, phase[cls], spec.texture_period);
        const double shade = 0.35 + 0.65 * t;
        for (int ch = 0; ch < 3; ++ch) s.image.at(ch, y, x) = vocab[cls].base_rgb[ch] * shade;
      }

    const double brightness = rng.uniform(1.0 - spec.brightness_range, 1.0 + spec.brightness_range);
    const double contrast = rng.uniform(1.0 - spec.contrast_range, 1.0 + spec.contrast_range);
    const double hue = rng.uniform(-spec.hue_range, spec.hue_range);
    apply_nuisance(s.image, brightness, contrast, hue, spec.noise_sigma, rng);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::int64_t> class_pixel_counts(const std::vector<ImageSample>& samples,
                                             int n_classes) {
  std::vector<std::int64_t> counts(n_classes, 0);
  for (const auto& s : samples) {
    if (!s.labels) continue;
    for (auto v : s.labels->data)
      if (v != s.ignore_value && v >= 0 && v < n_classes) ++counts[v];
  }
  return counts;
}

}  // namespace picie
