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

#include "sesscomp/corpus_io.h"

#include <cmath>
#include <fstream>

#include "sesscomp/binary_io.h"
#include "sesscomp/error.h"

namespace sesscomp {

void WriteCorpus(const EmbeddingCorpus& corpus, std::ostream& os) {
  BinaryWriter w(os);
  w.Magic(std::string_view(kCorpusMagic, 8));
  w.U32(kCorpusVersion);
  w.U32(static_cast<std::uint32_t>(corpus.dimension()));
  w.U32(static_cast<std::uint32_t>(corpus.windows_per_utterance()));
  w.U64(corpus.size());
  for (const auto& r : corpus.records()) {
    w.String(r.utterance_id);
    w.String(r.speaker_id);
    w.String(r.session_id);
    w.String(r.augmentation_id);
    // Column-major D x W is already window-major.
    const double* p = r.windows.data();
    for (Eigen::Index i = 0; i < r.windows.size(); ++i) {
      w.F32(static_cast<float>(p[i]));
    }
  }
}

EmbeddingCorpus ReadCorpus(std::istream& is) {
  BinaryReader r(is, "corpus");
  r.ExpectMagic(std::string_view(kCorpusMagic, 8));
  const std::uint32_t version = r.U32();
  if (version != kCorpusVersion) {
    throw Error(Errc::kVersionMismatch,
                "corpus version " + std::to_string(version) + ", expected " +
                    std::to_string(kCorpusVersion));
  }
  const std::uint32_t dim = r.U32();
  const std::uint32_t win = r.U32();
  const std::uint64_t count = r.U64();
  if (dim == 0 || win == 0) {
    throw Error(Errc::kInvalidArgument, "corpus header has zero dimension or window count");
  }
  EmbeddingCorpus corpus(static_cast<int>(dim), static_cast<int>(win));
  for (std::uint64_t k = 0; k < count; ++k) {
    UtteranceRecord rec;
    rec.utterance_id = r.String();
    rec.speaker_id = r.String();
    rec.session_id = r.String();
    rec.augmentation_id = r.String();
    rec.windows.resize(dim, win);
    double* p = rec.windows.data();
    for (Eigen::Index i = 0; i < rec.windows.size(); ++i) {
      const float v = r.F32();
      if (!std::isfinite(v)) {
        throw Error(Errc::kNonFinite,
                    "corpus record " + rec.utterance_id + " holds a non-finite value");
      }
      p[i] = static_cast<double>(v);
    }
    corpus.Add(std::move(rec));
  }
  return corpus;
}

void SaveCorpus(const EmbeddingCorpus& corpus, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot open " + path + " for writing");
  WriteCorpus(corpus, os);
}

EmbeddingCorpus LoadCorpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot open " + path);
  return ReadCorpus(is);
}

}  // namespace sesscomp
