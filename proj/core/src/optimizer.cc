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

#include "sesscomp/optimizer.h"

#include <cmath>

#include "sesscomp/error.h"

namespace sesscomp {

OptimizerState MakeOptimizer(const NetworkSpec& spec, const AdamConfig& config) {
  return OptimizerState{config, 0, ZeroParams(spec), ZeroParams(spec)};
}

void AdamUpdate(std::span<double> params, std::span<const double> grads,
                std::span<double> first_moment, std::span<double> second_moment,
                std::int64_t step, const AdamConfig& config) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw Error(Errc::kDimensionMismatch, "optimizer buffers differ in length");
  }
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / c1;
    const double v_hat = second_moment[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void OptimizerStep(NetworkParams& params, const NetworkParams& grads, OptimizerState& state) {
  auto p = Tensors(params);
  auto g = Tensors(grads);
  auto m = Tensors(state.first_moment);
  auto v = Tensors(state.second_moment);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw Error(Errc::kDimensionMismatch, "optimizer tensor count mismatch");
  }
  ++state.step;
  for (std::size_t t = 0; t < p.size(); ++t) {
    AdamUpdate(p[t], g[t], m[t], v[t], state.step, state.config);
  }
}

}  // namespace sesscomp
