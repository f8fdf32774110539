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

#ifndef SESSCOMP_EVAL_H_
#define SESSCOMP_EVAL_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sesscomp/embedding.h"

namespace sesscomp {

struct Trial {
  std::string enrol_id;
  std::string test_id;
  bool target = false;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct Protocol {
  std::string name;
  std::vector<Trial> trials;

  std::size_t num_targets() const;
  std::size_t num_nontargets() const { return trials.size() - num_targets(); }
  std::vector<std::uint8_t> labels() const;
};

// Throws kDegenerate unless the protocol holds both classes.
void RequireBothClasses(const Protocol& protocol);
// Throws kNotFound for any id absent from the corpus.
void RequireResolvable(const Protocol& protocol, const EmbeddingCorpus& corpus);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Trials are accepted when score >= threshold. Operating points are taken at
// every distinct score plus one above the maximum; the EER is read where
// FAR - FRR changes sign, linearly interpolating between the two adjacent
// points when no point has FAR == FRR exactly. Labels: 1 target, 0 nontarget.
EerResult ComputeEer(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct DetPoint {
  double threshold;  // +inf for the point above every score
  double far;
  double frr;
};

std::vector<DetPoint> DetPoints(std::span<const double> scores,
                                std::span<const std::uint8_t> labels);

// Targets of `positives_from` followed by nontargets of `negatives_from`, in
// source order.
Protocol MixProtocols(const Protocol& positives_from, const Protocol& negatives_from);
// All trials of `a` then all trials of `b`.
Protocol UnionProtocols(const Protocol& a, const Protocol& b);

// Targets: same speaker, different session. Nontargets: different speakers,
// same session. The larger class is thinned by an even stride to the size of
// the smaller one.
Protocol MakeConfoundProtocol(const EmbeddingCorpus& corpus);

// Randomly drawn same-speaker targets and different-speaker nontargets.
Protocol MakeStandardProtocol(const EmbeddingCorpus& corpus, std::size_t num_targets,
                              std::size_t num_nontargets, std::uint64_t seed);

// Text format: one "label enrol_id test_id" line per trial, label 1 or 0.
// Blank lines and lines starting with '#' are skipped on read.
void WriteProtocol(const Protocol& protocol, std::ostream& os);
Protocol ReadProtocol(std::istream& is, const std::string& name);
void SaveProtocol(const Protocol& protocol, const std::string& path,
                  const std::string& header_comment = "");
Protocol LoadProtocol(const std::string& path);

// "threshold\tfar\tfrr" lines.
void WriteDet(const std::vector<DetPoint>& points, std::ostream& os);

}  // namespace sesscomp

#endif  // SESSCOMP_EVAL_H_
