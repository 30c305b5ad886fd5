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
#include <vector>

#include "picie/autograd.hpp"

namespace picie {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adam with bias correction; weight decay is added to the gradient (L2).
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, const std::vector<Parameter>& params);

  void step(std::vector<Parameter>& params, const Gradients& grads);
  void reset();

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return t_; }

  // State access for checkpoints.
  Gradients& first_moment() { return m_; }
  Gradients& second_moment() { return v_; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  Gradients m_;
  Gradients v_;
};

}  // namespace picie
