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

#include "sesscomp/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "sesscomp/error.h"

namespace sesscomp {

std::size_t Protocol::num_targets() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.target; }));
}

std::vector<std::uint8_t> Protocol::labels() const {
  std::vector<std::uint8_t> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.target ? 1 : 0);
  return out;
}

void RequireBothClasses(const Protocol& protocol) {
  const std::size_t nt = protocol.num_targets();
  if (nt == 0 || nt == protocol.trials.size()) {
    throw Error(Errc::kDegenerate, "protocol '" + protocol.name +
                                       "' needs at least one target and one nontarget trial");
  }
}

void RequireResolvable(const Protocol& protocol, const EmbeddingCorpus& corpus) {
  for (const auto& t : protocol.trials) {
    if (!corpus.contains(t.enrol_id)) throw Error(Errc::kNotFound, "utterance " + t.enrol_id);
    if (!corpus.contains(t.test_id)) throw Error(Errc::kNotFound, "utterance " + t.test_id);
  }
}

namespace {

// Operating point counts at every distinct score threshold plus +inf.
struct Sweep {
  std::vector<double> thresholds;    // size K + 1, last is +inf
  std::vector<std::size_t> false_accepts;  // nontargets with score >= t
  std::vector<std::size_t> false_rejects;  // targets with score < t
  std::size_t targets = 0;
  std::size_t nontargets = 0;
};

Sweep BuildSweep(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(Errc::kDimensionMismatch, "scores and labels differ in length");
  }
  Sweep s;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error(Errc::kNonFinite, "trial score");
    if (labels[i]) ++s.targets; else ++s.nontargets;
  }
  if (s.targets == 0 || s.nontargets == 0) {
    throw Error(Errc::kDegenerate, "EER needs at least one target and one nontarget score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::size_t fa = s.nontargets;
  std::size_t fr = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double v = scores[order[i]];
    s.thresholds.push_back(v);
    s.false_accepts.push_back(fa);
    s.false_rejects.push_back(fr);
    for (; i < order.size() && scores[order[i]] == v; ++i) {
      if (labels[order[i]]) ++fr; else --fa;
    }
  }
  s.thresholds.push_back(std::numeric_limits<double>::infinity());
  s.false_accepts.push_back(fa);
  s.false_rejects.push_back(fr);
  return s;
}

}  // namespace

EerResult ComputeEer(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Sweep s = BuildSweep(scores, labels);
  const double nt = static_cast<double>(s.targets);
  const double nn = static_cast<double>(s.nontargets);
  auto far = [&](std::size_t k) { return static_cast<double>(s.false_accepts[k]) / nn; };
  auto frr = [&](std::size_t k) { return static_cast<double>(s.false_rejects[k]) / nt; };

  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    // Exact comparison of FA/Nn against FR/Nt in integers.
    const auto lhs = static_cast<unsigned long long>(s.false_accepts[k]) * s.targets;
    const auto rhs = static_cast<unsigned long long>(s.false_rejects[k]) * s.nontargets;
    if (lhs == rhs) return {far(k), s.thresholds[k]};
    if (lhs < rhs) {
      // k >= 1 here: the first point has FRR = 0 < FAR = 1.
      const double d0 = far(k - 1) - frr(k - 1);
      const double d1 = far(k) - frr(k);
      const double lambda = d0 / (d0 - d1);
      const double eer = far(k - 1) + lambda * (far(k) - far(k - 1));
      const double t0 = s.thresholds[k - 1];
      const double t1 = s.thresholds[k];
      const double threshold = std::isfinite(t1) ? t0 + lambda * (t1 - t0) : t0;
      return {eer, threshold};
    }
  }
  throw Error(Errc::kDegenerate, "no FAR/FRR crossing");  // unreachable
}

std::vector<DetPoint> DetPoints(std::span<const double> scores,
                                std::span<const std::uint8_t> labels) {
  const Sweep s = BuildSweep(scores, labels);
  std::vector<DetPoint> out;
  out.reserve(s.thresholds.size());
  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    out.push_back({s.thresholds[k],
                   static_cast<double>(s.false_accepts[k]) / static_cast<double>(s.nontargets),
                   static_cast<double>(s.false_rejects[k]) / static_cast<double>(s.targets)});
  }
  return out;
}

Protocol MixProtocols(const Protocol& positives_from, const Protocol& negatives_from) {
  if (positives_from.num_targets() == 0) {
    throw Error(Errc::kDegenerate, "protocol '" + positives_from.name + "' has no target trials");
  }
  if (negatives_from.num_nontargets() == 0) {
    throw Error(Errc::kDegenerate,
                "protocol '" + negatives_from.name + "' has no nontarget trials");
  }
  Protocol out;
  out.name = positives_from.name + "+" + negatives_from.name;
  for (const auto& t : positives_from.trials) {
    if (t.target) out.trials.push_back(t);
  }
  for (const auto& t : negatives_from.trials) {
    if (!t.target) out.trials.push_back(t);
  }
  return out;
}

Protocol UnionProtocols(const Protocol& a, const Protocol& b) {
  Protocol out;
  out.name = a.name + "|" + b.name;
  out.trials = a.trials;
  out.trials.insert(out.trials.end(), b.trials.begin(), b.trials.end());
  return out;
}

namespace {

std::vector<Trial> Thin(std::vector<Trial> trials, std::size_t n) {
  if (trials.size() <= n) return trials;
  std::vector<Trial> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(trials[k * trials.size() / n]);
  return out;
}

}  // namespace

Protocol MakeConfoundProtocol(const EmbeddingCorpus& corpus) {
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  std::map<std::string, std::vector<std::size_t>> by_session;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus.record(i).speaker_id].push_back(i);
    by_session[corpus.record(i).session_id].push_back(i);
  }
  // Emit pairs in corpus order so the protocol does not depend on map ordering.
  auto emit = [&](const std::map<std::string, std::vector<std::size_t>>& groups,
                  bool target) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [key, recs] : groups) {
      for (std::size_t a = 0; a < recs.size(); ++a) {
        for (std::size_t b = a + 1; b < recs.size(); ++b) {
          const auto& ra = corpus.record(recs[a]);
          const auto& rb = corpus.record(recs[b]);
          const bool keep = target ? ra.session_id != rb.session_id
                                   : ra.speaker_id != rb.speaker_id;
          if (keep) pairs.emplace_back(recs[a], recs[b]);
        }
      }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<Trial> trials;
    trials.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      trials.push_back({corpus.record(a).utterance_id, corpus.record(b).utterance_id, target});
    }
    return trials;
  };
  std::vector<Trial> targets = emit(by_speaker, true);
  std::vector<Trial> nontargets = emit(by_session, false);
  if (targets.empty()) {
    throw Error(Errc::kDegenerate,
                "confound protocol: corpus has no same-speaker cross-session pairs");
  }
  if (nontargets.empty()) {
    throw Error(Errc::kDegenerate,
                "confound protocol: corpus has no different-speaker same-session pairs "
                "(generate with shared_session_groups >= 1)");
  }
  const std::size_t n = std::min(targets.size(), nontargets.size());
  Protocol out;
  out.name = "confound";
  out.trials = Thin(std::move(targets), n);
  auto neg = Thin(std::move(nontargets), n);
  out.trials.insert(out.trials.end(), neg.begin(), neg.end());
  return out;
}

Protocol MakeStandardProtocol(const EmbeddingCorpus& corpus, std::size_t num_targets,
                              std::size_t num_nontargets, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus.record(i).speaker_id].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> multi;
  for (const auto& [spk, recs] : by_speaker) {
    if (recs.size() >= 2) multi.push_back(&recs);
  }
  if (num_targets > 0 && multi.empty()) {
    throw Error(Errc::kDegenerate, "standard protocol: no speaker has two utterances");
  }
  if (num_nontargets > 0 && by_speaker.size() < 2) {
    throw Error(Errc::kDegenerate, "standard protocol: corpus has a single speaker");
  }
  std::mt19937_64 rng(seed);
  Protocol out;
  out.name = "standard";
  std::uniform_int_distribution<std::size_t> pick_spk(0, multi.empty() ? 0 : multi.size() - 1);
  for (std::size_t k = 0; k < num_targets; ++k) {
    const auto& recs = *multi[pick_spk(rng)];
    std::uniform_int_distribution<std::size_t> first(0, recs.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, recs.size() - 2);
    const std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    out.trials.push_back(
        {corpus.record(recs[a]).utterance_id, corpus.record(recs[b]).utterance_id, true});
  }
  std::uniform_int_distribution<std::size_t> pick_rec(0, corpus.size() - 1);
  for (std::size_t k = 0; k < num_nontargets;) {
    const auto& ra = corpus.record(pick_rec(rng));
    const auto& rb = corpus.record(pick_rec(rng));
    if (ra.speaker_id == rb.speaker_id) continue;
    out.trials.push_back({ra.utterance_id, rb.utterance_id, false});
    ++k;
  }
  return out;
}

void WriteProtocol(const Protocol& protocol, std::ostream& os) {
  for (const auto& t : protocol.trials) {
    os << (t.target ? '1' : '0') << ' ' << t.enrol_id << ' ' << t.test_id << '\n';
  }
  if (!os) throw Error(Errc::kIo, "protocol write failed");
}

Protocol ReadProtocol(std::istream& is, const std::string& name) {
  Protocol p;
  p.name = name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string label, enrol, test, extra;
    if (!(ls >> label >> enrol >> test) || (ls >> extra) || (label != "0" && label != "1")) {
      throw Error(Errc::kInvalidArgument,
                  "protocol " + name + " line " + std::to_string(lineno) +
                      ": expected 'label enrol_id test_id' with label 0 or 1");
    }
    p.trials.push_back({enrol, test, label == "1"});
  }
  return p;
}

void SaveProtocol(const Protocol& protocol, const std::string& path,
                  const std::string& header_comment) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot open " + path + " for writing");
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  WriteProtocol(protocol, os);
}

Protocol LoadProtocol(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot open " + path);
  return ReadProtocol(is, path);
}

void WriteDet(const std::vector<DetPoint>& points, std::ostream& os) {
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%.17g\n", p.threshold, p.far, p.frr);
    os << buf;
  }
}

}  // namespace sesscomp
