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

#include "sesscomp/embedding.h"

#include <cmath>
#include <unordered_set>

#include "sesscomp/error.h"

namespace sesscomp {

double Cosine(const EmbeddingRef& a, const EmbeddingRef& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch,
                "cosine of vectors with sizes " + std::to_string(a.size()) +
                    " and " + std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw Error(Errc::kDegenerate, "cosine of a zero-norm embedding");
  }
  return a.dot(b) / (na * nb);
}

Embedding Pool(const Eigen::Ref<const Eigen::MatrixXd>& windows) {
  if (windows.cols() == 0) {
    throw Error(Errc::kInvalidArgument, "pooling an empty window list");
  }
  return windows.rowwise().mean();
}

Embedding Pool(const std::vector<Embedding>& windows) {
  if (windows.empty()) {
    throw Error(Errc::kInvalidArgument, "pooling an empty window list");
  }
  Embedding sum = Embedding::Zero(windows.front().size());
  for (const auto& w : windows) {
    if (w.size() != sum.size()) {
      throw Error(Errc::kDimensionMismatch, "windows of unequal dimension");
    }
    sum += w;
  }
  return sum / static_cast<double>(windows.size());
}

EmbeddingCorpus::EmbeddingCorpus(int dimension, int windows_per_utterance)
    : dimension_(dimension), windows_(windows_per_utterance) {
  if (dimension < 1 || windows_per_utterance < 1) {
    throw Error(Errc::kInvalidArgument,
                "corpus dimension and window count must be >= 1");
  }
}

void EmbeddingCorpus::Add(UtteranceRecord record) {
  if (record.windows.rows() != dimension_ || record.windows.cols() != windows_) {
    throw Error(Errc::kDimensionMismatch,
                "record " + record.utterance_id + " has shape " +
                    std::to_string(record.windows.rows()) + "x" +
                    std::to_string(record.windows.cols()) + ", corpus expects " +
                    std::to_string(dimension_) + "x" + std::to_string(windows_));
  }
  if (!record.windows.allFinite()) {
    throw Error(Errc::kNonFinite, "record " + record.utterance_id);
  }
  if (index_.count(record.utterance_id) != 0) {
    throw Error(Errc::kInvalidArgument,
                "duplicate utterance id " + record.utterance_id);
  }
  index_.emplace(record.utterance_id, records_.size());
  records_.push_back(std::move(record));
}

std::size_t EmbeddingCorpus::IndexOf(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) {
    throw Error(Errc::kNotFound, "utterance " + utterance_id);
  }
  return it->second;
}

const UtteranceRecord& EmbeddingCorpus::at(const std::string& utterance_id) const {
  return records_[IndexOf(utterance_id)];
}

std::vector<std::string> EmbeddingCorpus::Speakers() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.speaker_id).second) out.push_back(r.speaker_id);
  }
  return out;
}

EmbeddingCorpus EmbeddingCorpus::SelectSpeakers(
    const std::vector<std::string>& speakers) const {
  std::unordered_set<std::string> keep(speakers.begin(), speakers.end());
  EmbeddingCorpus out(dimension_, windows_);
  for (const auto& r : records_) {
    if (keep.count(r.speaker_id)) out.Add(r);
  }
  return out;
}

bool operator==(const UtteranceRecord& a, const UtteranceRecord& b) {
  return a.utterance_id == b.utterance_id && a.speaker_id == b.speaker_id &&
         a.session_id == b.session_id && a.augmentation_id == b.augmentation_id &&
         a.windows.rows() == b.windows.rows() &&
         a.windows.cols() == b.windows.cols() && a.windows == b.windows;
}

bool operator==(const EmbeddingCorpus& a, const EmbeddingCorpus& b) {
  return a.dimension_ == b.dimension_ && a.windows_ == b.windows_ &&
         a.records_ == b.records_;
}

}  // namespace sesscomp
