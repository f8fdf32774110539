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

#include "sesscomp/checkpoint.h"

#include <cmath>
#include <fstream>

#include "sesscomp/binary_io.h"
#include "sesscomp/error.h"

namespace sesscomp {

void WriteCheckpoint(const Checkpoint& ck, std::ostream& os) {
  Validate(ck.spec);
  BinaryWriter w(os);
  w.Magic(std::string_view(kCheckpointMagic, 8));
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(ck.kind));
  w.U32(ck.num_models);
  w.U32(static_cast<std::uint32_t>(ck.spec.input_dim));
  w.U32(static_cast<std::uint32_t>(ck.spec.output_dim));
  w.U32(static_cast<std::uint32_t>(ck.spec.hidden_dim));
  w.U32(static_cast<std::uint32_t>(ck.spec.num_blocks));
  w.U8(static_cast<std::uint8_t>(ck.spec.activation));
  w.F64(ck.spec.leaky_slope);
  w.F64(ck.spec.dropout_rate);
  w.U8(ck.spec.prenorm_residual ? 1 : 0);

  const NetworkParams shape = ZeroParams(ck.spec);
  const auto expected = Tensors(shape);
  const auto tensors = Tensors(ck.params);
  if (expected.size() != tensors.size()) {
    throw Error(Errc::kDimensionMismatch, "checkpoint parameters do not match spec");
  }
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    if (tensors[t].size() != expected[t].size()) {
      throw Error(Errc::kDimensionMismatch, "checkpoint tensor " + std::to_string(t) +
                                                " does not match spec");
    }
    for (double v : tensors[t]) w.F64(v);
  }
}

Checkpoint ReadCheckpoint(std::istream& is) {
  BinaryReader r(is, "checkpoint");
  r.ExpectMagic(std::string_view(kCheckpointMagic, 8));
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw Error(Errc::kVersionMismatch, "checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t kind = r.U32();
  if (kind > static_cast<std::uint32_t>(NetworkKind::kQStack)) {
    throw Error(Errc::kInvalidArgument, "unknown checkpoint kind " + std::to_string(kind));
  }
  ck.kind = static_cast<NetworkKind>(kind);
  ck.num_models = r.U32();
  ck.spec.input_dim = static_cast<int>(r.U32());
  ck.spec.output_dim = static_cast<int>(r.U32());
  ck.spec.hidden_dim = static_cast<int>(r.U32());
  ck.spec.num_blocks = static_cast<int>(r.U32());
  ck.spec.activation = static_cast<Activation>(r.U8());
  ck.spec.leaky_slope = r.F64();
  ck.spec.dropout_rate = r.F64();
  ck.spec.prenorm_residual = r.U8() != 0;
  Validate(ck.spec);

  ck.params = ZeroParams(ck.spec);
  for (auto t : Tensors(ck.params)) {
    for (double& v : t) {
      v = r.F64();
      if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "checkpoint parameter");
    }
  }
  if (!r.AtEnd()) throw Error(Errc::kInvalidArgument, "trailing bytes after checkpoint");
  return ck;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot open " + path + " for writing");
  WriteCheckpoint(checkpoint, os);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot open " + path);
  return ReadCheckpoint(is);
}

}  // namespace sesscomp
