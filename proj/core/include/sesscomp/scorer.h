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

#ifndef SESSCOMP_SCORER_H_
#define SESSCOMP_SCORER_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "sesscomp/embedding.h"
#include "sesscomp/eval.h"
#include "sesscomp/session_net.h"

namespace sesscomp {

// Cosine of the pooled window embeddings.
double SpeakerSimilarity(const UtteranceRecord& a, const UtteranceRecord& b);
// Cosine of the session embeddings extracted from the pooled embeddings.
double SessionSimilarity(const SessionModel& model, const UtteranceRecord& a,
                         const UtteranceRecord& b);
// spk - w * sess.
double CompensatedScore(double spk, double sess, double w);

struct TrialScore {
  double spk = 0.0;
  double sess = 0.0;
  double score = 0.0;
};

struct ScoredTrial {
  Trial trial;
  TrialScore score;
};

// Caches pooled and session embeddings for every record of a corpus.
class TrialScorer {
 public:
  // `model` may be null, in which case session similarities are zero.
  TrialScorer(const EmbeddingCorpus& corpus, const SessionModel* model);

  double Speaker(const std::string& enrol_id, const std::string& test_id) const;
  double Session(const std::string& enrol_id, const std::string& test_id) const;
  TrialScore Score(const Trial& trial, double w) const;

 private:
  const EmbeddingCorpus& corpus_;
  bool has_model_;
  Eigen::MatrixXd pooled_;
  Eigen::MatrixXd session_;
};

std::vector<ScoredTrial> ScoreProtocol(const Protocol& protocol, const TrialScorer& scorer,
                                       double w);

struct SweepPoint {
  double w;
  double eer;
};

struct WeightSweepResult {
  std::vector<SweepPoint> grid;
  double best_w = 0.0;
  double best_eer = 0.0;
};

// {0.00, 0.01, ..., 1.00}.
std::vector<double> DefaultWeightGrid();

// EER of spk - w * sess per grid point; the minimum wins, ties go to the
// smallest w.
WeightSweepResult SweepWeight(const std::vector<double>& spk, const std::vector<double>& sess,
                              const std::vector<std::uint8_t>& labels,
                              const std::vector<double>& grid);
WeightSweepResult SweepWeight(const Protocol& protocol, const TrialScorer& scorer,
                              const std::vector<double>& grid);

// "enrol\ttest\tlabel\tspk\tsess\tscore" lines; '#' lines are comments.
void WriteScoredTrials(const std::vector<ScoredTrial>& trials, std::ostream& os);
std::vector<ScoredTrial> ReadScoredTrials(std::istream& is);
// "w\teer" lines.
void WriteSweep(const WeightSweepResult& sweep, std::ostream& os);

}  // namespace sesscomp

#endif  // SESSCOMP_SCORER_H_
