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
#include <optional>
#include <string>
#include <vector>

#include "picie/autograd.hpp"
#include "picie/centroids.hpp"
#include "picie/features.hpp"

namespace picie {

enum class Method { kPicie, kMdc, kNoTrain };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

// Everything needed to evaluate a trained extractor or resume training.
struct Checkpoint {
  ExtractorConfig extractor;
  std::vector<Parameter> params;
  Method method = Method::kPicie;
  int epoch = 0;  // completed training epochs
  std::uint64_t config_hash = 0;

  // Optimizer state, aligned with params.
  std::int64_t adam_steps = 0;
  Gradients adam_m;
  Gradients adam_v;

  // Centroids of the last clustering pass, in the order
  // (K1 view 1, K1 view 2, K2 view 1, K2 view 2) for the heads that ran.
  std::vector<Centroids> last_centroids;
  // K1 centroids fitted on clean features of the final extractor; used by
  // prediction.
  std::optional<Centroids> eval_centroids;

  std::string rng_state;
};

// Binary layout: magic "PICIECK1", version byte, then the fields above.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);

// Throws DataError on a malformed file, an unsupported version, or when
// `expected_hash` is given and differs from the stored config hash.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_hash = std::nullopt);

}  // namespace picie
