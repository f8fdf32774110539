// Copyright (c) 2026 The sesscomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SESSCOMP_OPTIMIZER_H_
#define SESSCOMP_OPTIMIZER_H_

#include <cstdint>
#include <span>

#include "sesscomp/mlp.h"

namespace sesscomp {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  NetworkParams first_moment;
  NetworkParams second_moment;
};

OptimizerState MakeOptimizer(const NetworkSpec& spec, const AdamConfig& config);

// One bias-corrected Adam update on flat buffers; `step` is the 1-based index
// of this update. All buffers must have equal length.
void AdamUpdate(std::span<double> params, std::span<const double> grads,
                std::span<double> first_moment, std::span<double> second_moment,
                std::int64_t step, const AdamConfig& config);

// Applies one update to every tensor and advances state.step.
void OptimizerStep(NetworkParams& params, const NetworkParams& grads, OptimizerState& state);

}  // namespace sesscomp

#endif  // SESSCOMP_OPTIMIZER_H_
