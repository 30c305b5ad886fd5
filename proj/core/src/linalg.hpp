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

#include <Eigen/Core>
#include <span>

namespace picie::linalg {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Eigen-owned copy of a row-major block. Vectorized kernels pick their
// peeling from the buffer address; aligned owned storage makes every product
// bit-reproducible regardless of where the source vector was allocated.
inline RowMat owned(const double* data, Eigen::Index rows, Eigen::Index cols) {
  return ConstMapMat(data, rows, cols);
}

inline void copy_to(const RowMat& m, double* dst) {
  MapMat(dst, m.rows(), m.cols()) = m;
}

inline void add_to(const RowMat& m, double* dst) {
  MapMat(dst, m.rows(), m.cols()) += m;
}

// Sequential row sum.
inline double row_sum(const RowMat& m, Eigen::Index r) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) s += m(r, c);
  return s;
}

}  // namespace picie::linalg
