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

#ifndef SESSCOMP_EMBEDDING_H_
#define SESSCOMP_EMBEDDING_H_

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sesscomp {

using Embedding = Eigen::VectorXd;
using EmbeddingRef = Eigen::Ref<const Eigen::VectorXd>;

// Cosine similarity. Throws kDimensionMismatch on unequal lengths and
// kDegenerate if either vector has zero norm.
double Cosine(const EmbeddingRef& a, const EmbeddingRef& b);

// Element-wise mean over the columns of `windows` (D x W). No renormalization.
Embedding Pool(const Eigen::Ref<const Eigen::MatrixXd>& windows);
Embedding Pool(const std::vector<Embedding>& windows);

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string session_id;
  std::string augmentation_id;  // empty means untagged
  // D x W; column w is the embedding of window w.
  Eigen::MatrixXd windows;

  Embedding Pooled() const { return Pool(windows); }
};

// Immutable-after-construction collection of utterance records with a common
// embedding dimension and window count.
class EmbeddingCorpus {
 public:
  EmbeddingCorpus(int dimension, int windows_per_utterance);

  int dimension() const { return dimension_; }
  int windows_per_utterance() const { return windows_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<UtteranceRecord>& records() const { return records_; }
  const UtteranceRecord& record(std::size_t i) const { return records_.at(i); }

  // Validates shape, finiteness and id uniqueness.
  void Add(UtteranceRecord record);

  // Throws kNotFound for unknown ids.
  const UtteranceRecord& at(const std::string& utterance_id) const;
  std::size_t IndexOf(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const {
    return index_.count(utterance_id) != 0;
  }

  // Speaker ids in order of first appearance.
  std::vector<std::string> Speakers() const;

  // New corpus holding only the records whose speaker is in the list, in the
  // original order.
  EmbeddingCorpus SelectSpeakers(const std::vector<std::string>& speakers) const;

  friend bool operator==(const EmbeddingCorpus& a, const EmbeddingCorpus& b);

 private:
  int dimension_;
  int windows_;
  std::vector<UtteranceRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

bool operator==(const UtteranceRecord& a, const UtteranceRecord& b);

}  // namespace sesscomp

#endif  // SESSCOMP_EMBEDDING_H_
