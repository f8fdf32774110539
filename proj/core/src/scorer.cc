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

#include "sesscomp/scorer.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sesscomp/error.h"

namespace sesscomp {

double SpeakerSimilarity(const UtteranceRecord& a, const UtteranceRecord& b) {
  return Cosine(a.Pooled(), b.Pooled());
}

double SessionSimilarity(const SessionModel& model, const UtteranceRecord& a,
                         const UtteranceRecord& b) {
  return Cosine(model.Extract(a.Pooled()), model.Extract(b.Pooled()));
}

double CompensatedScore(double spk, double sess, double w) {
  if (!std::isfinite(spk) || !std::isfinite(sess) || !std::isfinite(w)) {
    throw Error(Errc::kNonFinite, "compensated score input");
  }
  if (w < 0.0) throw Error(Errc::kInvalidArgument, "session weight must be >= 0");
  return spk - w * sess;
}

TrialScorer::TrialScorer(const EmbeddingCorpus& corpus, const SessionModel* model)
    : corpus_(corpus), has_model_(model != nullptr) {
  pooled_.resize(corpus.dimension(), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    pooled_.col(static_cast<Eigen::Index>(i)) = corpus.record(i).Pooled();
  }
  if (model != nullptr) {
    if (model->spec.input_dim != corpus.dimension()) {
      throw Error(Errc::kDimensionMismatch,
                  "session network input " + std::to_string(model->spec.input_dim) +
                      " vs corpus dimension " + std::to_string(corpus.dimension()));
    }
    session_ = model->ExtractBatch(pooled_);
  }
}

double TrialScorer::Speaker(const std::string& enrol_id, const std::string& test_id) const {
  return Cosine(pooled_.col(static_cast<Eigen::Index>(corpus_.IndexOf(enrol_id))),
                pooled_.col(static_cast<Eigen::Index>(corpus_.IndexOf(test_id))));
}

double TrialScorer::Session(const std::string& enrol_id, const std::string& test_id) const {
  if (!has_model_) return 0.0;
  return Cosine(session_.col(static_cast<Eigen::Index>(corpus_.IndexOf(enrol_id))),
                session_.col(static_cast<Eigen::Index>(corpus_.IndexOf(test_id))));
}

TrialScore TrialScorer::Score(const Trial& trial, double w) const {
  TrialScore s;
  s.spk = Speaker(trial.enrol_id, trial.test_id);
  s.sess = Session(trial.enrol_id, trial.test_id);
  s.score = CompensatedScore(s.spk, s.sess, w);
  return s;
}

std::vector<ScoredTrial> ScoreProtocol(const Protocol& protocol, const TrialScorer& scorer,
                                       double w) {
  std::vector<ScoredTrial> out;
  out.reserve(protocol.trials.size());
  for (const auto& t : protocol.trials) out.push_back({t, scorer.Score(t, w)});
  return out;
}

std::vector<double> DefaultWeightGrid() {
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(k / 100.0);
  return grid;
}

WeightSweepResult SweepWeight(const std::vector<double>& spk, const std::vector<double>& sess,
                              const std::vector<std::uint8_t>& labels,
                              const std::vector<double>& grid) {
  if (grid.empty()) throw Error(Errc::kInvalidArgument, "empty weight grid");
  if (spk.size() != sess.size() || spk.size() != labels.size()) {
    throw Error(Errc::kDimensionMismatch, "sweep inputs differ in length");
  }
  WeightSweepResult r;
  std::vector<double> scores(spk.size());
  bool first = true;
  for (double w : grid) {
    for (std::size_t i = 0; i < spk.size(); ++i) scores[i] = CompensatedScore(spk[i], sess[i], w);
    const double eer = ComputeEer(scores, labels).eer;
    r.grid.push_back({w, eer});
    if (first || eer < r.best_eer || (eer == r.best_eer && w < r.best_w)) {
      r.best_w = w;
      r.best_eer = eer;
      first = false;
    }
  }
  return r;
}

WeightSweepResult SweepWeight(const Protocol& protocol, const TrialScorer& scorer,
                              const std::vector<double>& grid) {
  RequireBothClasses(protocol);
  std::vector<double> spk;
  std::vector<double> sess;
  for (const auto& t : protocol.trials) {
    spk.push_back(scorer.Speaker(t.enrol_id, t.test_id));
    sess.push_back(scorer.Session(t.enrol_id, t.test_id));
  }
  return SweepWeight(spk, sess, protocol.labels(), grid);
}

void WriteScoredTrials(const std::vector<ScoredTrial>& trials, std::ostream& os) {
  char buf[96];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%.17g\n", t.score.spk, t.score.sess,
                  t.score.score);
    os << t.trial.enrol_id << '\t' << t.trial.test_id << '\t' << (t.trial.target ? 1 : 0)
       << buf;
  }
  if (!os) throw Error(Errc::kIo, "scored-trial write failed");
}

std::vector<ScoredTrial> ReadScoredTrials(std::istream& is) {
  std::vector<ScoredTrial> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ScoredTrial t;
    std::string label;
    if (!(ls >> t.trial.enrol_id >> t.trial.test_id >> label >> t.score.spk >> t.score.sess >>
          t.score.score) ||
        (label != "0" && label != "1")) {
      throw Error(Errc::kInvalidArgument,
                  "scored trials line " + std::to_string(lineno) +
                      ": expected 'enrol test label spk sess score'");
    }
    t.trial.target = label == "1";
    out.push_back(std::move(t));
  }
  return out;
}

void WriteSweep(const WeightSweepResult& sweep, std::ostream& os) {
  char buf[64];
  for (const auto& p : sweep.grid) {
    std::snprintf(buf, sizeof buf, "%.6g\t%.10f\n", p.w, p.eer);
    os << buf;
  }
}

}  // namespace sesscomp
