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

#ifndef SESSCOMP_SYNTHGEN_H_
#define SESSCOMP_SYNTHGEN_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "sesscomp/embedding.h"

namespace sesscomp {

// Latent-factor generator for desk-scale experiments. Every window embedding is
//   alpha * v_spk + beta * v_sess + gamma * v_aug + sigma * n,   n ~ N(0, I_D)
// with unit-norm latents drawn from a seeded stream.
struct SynthConfig {
  int num_speakers = 10;
  int sessions_per_speaker = 4;
  int utterances_per_session = 4;
  // Each group replaces one session slot of a speaker pair (2p, 2p+1) with a
  // session shared by both speakers.
  int shared_session_groups = 0;
  int dimension = 128;
  int windows_per_utterance = 10;
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
  // Session latents live in a random subspace of this rank; 0 means the full
  // D-dimensional space.
  int session_rank = 0;
  // Pool of augmentation tags; 0 means sessions_per_speaker. Session slot s of
  // speaker i carries tag (i + s) mod num_augmentations.
  int num_augmentations = 0;
  std::uint64_t seed = 0;
  // Selects an independent noise stream over the same latents, used to emulate
  // several extractors observing one population.
  std::uint64_t realization = 0;
};

void Validate(const SynthConfig& config);

struct GroundTruth {
  int dimension = 0;
  std::map<std::string, Embedding> speakers;
  std::map<std::string, Embedding> sessions;
  std::map<std::string, Embedding> augmentations;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SynthOutput {
  EmbeddingCorpus corpus;
  GroundTruth truth;
};

SynthOutput Generate(const SynthConfig& config);

// Cosine of the true session latents; exactly 1.0 for equal session ids.
double OracleSessionSimilarity(const GroundTruth& truth, const UtteranceRecord& a,
                               const UtteranceRecord& b);

// Ground-truth sidecar: "SESSGT01" | u32 version=1 | u32 D | then the speaker,
// session and augmentation tables, each u64 count + (u16-len id, D f64) rows.
inline constexpr char kTruthMagic[] = "SESSGT01";
inline constexpr std::uint32_t kTruthVersion = 1;

void WriteGroundTruth(const GroundTruth& truth, std::ostream& os);
GroundTruth ReadGroundTruth(std::istream& is);
void SaveGroundTruth(const GroundTruth& truth, const std::string& path);
GroundTruth LoadGroundTruth(const std::string& path);

}  // namespace sesscomp

#endif  // SESSCOMP_SYNTHGEN_H_
