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

#ifndef SESSCOMP_CHECKPOINT_H_
#define SESSCOMP_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sesscomp/mlp.h"

namespace sesscomp {

enum class NetworkKind : std::uint32_t { kSessionNet = 0, kQStack = 1 };

// Parameter checkpoint:
//   "SESSNET1" | u32 version=1 | u32 kind | u32 num_models
//   spec: u32 input, u32 output, u32 hidden, u32 blocks, u8 activation,
//         f64 leaky_slope, f64 dropout, u8 prenorm_residual
//   every tensor of Tensors(params) as f64, declaration order.
inline constexpr char kCheckpointMagic[] = "SESSNET1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkKind kind = NetworkKind::kSessionNet;
  // For Q-stack checkpoints: number of embedding models stacked in the input.
  std::uint32_t num_models = 1;
  NetworkSpec spec;
  NetworkParams params;
};

void WriteCheckpoint(const Checkpoint& checkpoint, std::ostream& os);
Checkpoint ReadCheckpoint(std::istream& is);
void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace sesscomp

#endif  // SESSCOMP_CHECKPOINT_H_
