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

#ifndef SESSCOMP_CORPUS_IO_H_
#define SESSCOMP_CORPUS_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sesscomp/embedding.h"

namespace sesscomp {

// Corpus file layout (little-endian):
//   "SESSCMP1" | u32 version=1 | u32 D | u32 W | u64 records
//   per record: 4 x (u16 len, bytes) for utterance/speaker/session/augmentation
//               then W*D f32, window-major.
inline constexpr char kCorpusMagic[] = "SESSCMP1";
inline constexpr std::uint32_t kCorpusVersion = 1;

// Values are narrowed to f32 on write; loading widens exactly.
void WriteCorpus(const EmbeddingCorpus& corpus, std::ostream& os);
EmbeddingCorpus ReadCorpus(std::istream& is);

void SaveCorpus(const EmbeddingCorpus& corpus, const std::string& path);
EmbeddingCorpus LoadCorpus(const std::string& path);

}  // namespace sesscomp

#endif  // SESSCOMP_CORPUS_IO_H_
