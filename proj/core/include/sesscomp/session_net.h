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

#ifndef SESSCOMP_SESSION_NET_H_
#define SESSCOMP_SESSION_NET_H_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sesscomp/embedding.h"
#include "sesscomp/mlp.h"

namespace sesscomp {

struct SessionNetConfig {
  int hidden_dim = 256;
  int num_blocks = 3;
  int embed_dim = 128;
  double dropout = 0.1;
  Activation activation = Activation::kGelu;
  int steps = 1000;
  int speakers_per_batch = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Feed one random window per utterance instead of the pooled embedding.
  bool window_inputs = false;
};

void Validate(const SessionNetConfig& config);
NetworkSpec SessionNetSpec(const SessionNetConfig& config, int input_dim);

// The auxiliary network that maps a speaker embedding to a session embedding.
// Extraction always runs in eval mode.
struct SessionModel {
  NetworkSpec spec;
  NetworkParams params;

  Embedding Extract(const EmbeddingRef& speaker_embedding) const;
  // Columns in, columns out.
  Eigen::MatrixXd ExtractBatch(const Eigen::Ref<const Eigen::MatrixXd>& speaker_embeddings) const;
};

// Two sessions of one speaker with two utterances each; record indices are
// laid out [session][utterance].
struct Quadruple {
  std::string speaker_id;
  std::array<std::string, 2> sessions;
  std::array<std::array<std::size_t, 2>, 2> records;
};

// Draws quadruples uniformly over eligible speakers. A speaker is eligible if
// it has two sessions that each hold two utterances sharing an augmentation
// tag, with the two tags distinct (untagged utterances match anything).
class QuadrupleSampler {
 public:
  explicit QuadrupleSampler(const EmbeddingCorpus& corpus);

  Quadruple Sample(std::mt19937_64& rng) const;
  const std::vector<std::string>& eligible_speakers() const { return speakers_; }

 private:
  struct Unit {
    std::string session;
    std::vector<std::size_t> records;
  };
  struct Candidate {
    std::vector<Unit> units;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
  };
  std::vector<std::string> speakers_;
  std::vector<Candidate> candidates_;
};

Quadruple SampleQuadruple(const EmbeddingCorpus& corpus, std::mt19937_64& rng);

// 1 - cos for same-session pairs, cos otherwise.
double PairLoss(const EmbeddingRef& a, const EmbeddingRef& b, bool same_session);

// Column order s1u0, s1u1, s2u0, s2u1. Two same-session pairs and four
// cross-session pairs.
struct QuadruplePair {
  int first;
  int second;
  bool same_session;
};
inline constexpr std::array<QuadruplePair, 6> kQuadruplePairs{{
    {0, 1, true},
    {2, 3, true},
    {0, 2, false},
    {0, 3, false},
    {1, 2, false},
    {1, 3, false},
}};

// Mean pair loss over the six pairs of one quadruple's session embeddings
// (embed_dim x 4). Writes dLoss/dEmbeddings when `grad` is non-null.
double QuadrupleLoss(const Eigen::Ref<const Eigen::MatrixXd>& session_embeddings,
                     Eigen::MatrixXd* grad = nullptr);

// Mean quadruple loss over a batch, computed on pooled embeddings.
double BatchLoss(const std::vector<Quadruple>& batch, const EmbeddingCorpus& corpus,
                 const SessionModel& model, ForwardMode mode = {},
                 NetworkParams* grads = nullptr);
double BatchLoss(const Quadruple& quadruple, const EmbeddingCorpus& corpus,
                 const SessionModel& model);

struct SessionTrainResult {
  SessionModel model;
  std::vector<double> loss_curve;  // one entry per step
};

// Only the session network is optimized; the corpus is read-only.
SessionTrainResult TrainSessionNet(const EmbeddingCorpus& corpus,
                                   const SessionNetConfig& config);

struct SessionSeparation {
  double mean_same_session = 0.0;
  double mean_cross_session = 0.0;
  std::size_t same_pairs = 0;
  std::size_t cross_pairs = 0;

  double gap() const { return mean_same_session - mean_cross_session; }
};

// Session-cosine statistics over every same-speaker utterance pair.
SessionSeparation MeasureSeparation(const EmbeddingCorpus& corpus, const SessionModel& model);

}  // namespace sesscomp

#endif  // SESSCOMP_SESSION_NET_H_
