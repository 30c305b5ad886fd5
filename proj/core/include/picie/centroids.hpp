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

#include <span>
#include <vector>

namespace picie {

// K x D prototype matrix, rows unit-norm.
struct Centroids {
  int k = 0;
  int dim = 0;
  int view = 0;  // 0 = unspecified, 1 or 2 for two-view clustering
  std::vector<double> data;

  Centroids() = default;
  Centroids(int clusters, int dimension, int view_tag = 0)
      : k(clusters), dim(dimension), view(view_tag),
        data(static_cast<std::size_t>(clusters) * dimension, 0.0) {}

  std::span<double> row(int i) { return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }

  // Throws NumericalError on NaN rows or rows off the unit sphere by > tol.
  void check_invariants(double tol = 1e-5) const;

  bool operator==(const Centroids&) const = default;
};

}  // namespace picie
