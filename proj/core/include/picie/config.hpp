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
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "picie/dataio.hpp"
#include "picie/eval.hpp"
#include "picie/features.hpp"
#include "picie/trainer.hpp"

namespace picie {

enum class DataSource { kSynthetic, kDirectory };

// Everything a command needs, resolved before any compute starts. Keys are
// flat and dotted ("train.k1", "model.backbone"); see RunConfig::keys().
struct RunConfig {
  DataSource source = DataSource::kSynthetic;
  DatasetManifest manifest;
  std::optional<std::filesystem::path> remap_path;
  SyntheticSpec synthetic;
  ExtractorConfig extractor;
  TrainConfig train;
  std::vector<Partition> partitions;
  bool robustness = false;
  std::filesystem::path output_dir = "runs/default";

  RunConfig();

  // Throws ConfigError naming the key on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // "key = value" lines for every key, in keys() order.
  std::string snapshot() const;
  // Hash over the keys that determine the trained model (model, method,
  // seed, train, kmeans, aug); embedded in checkpoints.
  std::uint64_t model_hash() const;

  void validate() const;
  int n_classes() const;
};

// Parses "key = value" lines; '#' starts a comment.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Applies "key=value" assignments in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments);

// PICIE_<KEY> variables, dots written as "__" (PICIE_TRAIN__K1 -> train.k1).
// Unknown PICIE_ variables are rejected.
void apply_environment(RunConfig& config, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> picie_environment();

// Loads the directory dataset (reporting skipped files) or generates the
// synthetic one.
LoadResult load_dataset(const RunConfig& config);

}  // namespace picie
