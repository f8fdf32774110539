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
#include <random>
#include <set>
#include <sstream>

#include "gtest_util.h"
#include "sesscomp/scorer.h"
#include "sesscomp/synthgen.h"
#include "test_util.h"

namespace sesscomp {
namespace {

using Labels = std::vector<std::uint8_t>;

struct Rates {
  double far, frr;
  long fa, fr;
};

// Accept when score >= t.
Rates RatesAt(const std::vector<double>& s, const Labels& y, double t) {
  long fa = 0, fr = 0, nt = 0, nn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i]) {
      ++nt;
      fr += s[i] < t;
    } else {
      ++nn;
      fa += s[i] >= t;
    }
  }
  return {static_cast<double>(fa) / nn, static_cast<double>(fr) / nt, fa, fr};
}

// Thresholds below every score, at every midpoint between distinct scores,
// and above every score.
std::vector<double> MidpointThresholds(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> t{s.front() - 1.0};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) t.push_back(0.5 * (s[i] + s[i + 1]));
  t.push_back(s.back() + 1.0);
  return t;
}

TEST(EerTest, HandCases) {
  EXPECT_EQ(ComputeEer(std::vector<double>{3, 4, 1, 2}, Labels{1, 1, 0, 0}).eer, 0.0);
  EXPECT_EQ(ComputeEer(std::vector<double>{1, 3, 2, 4}, Labels{1, 1, 0, 0}).eer, 0.5);
  // Fully reversed scores.
  EXPECT_EQ(ComputeEer(std::vector<double>{1, 2, 3, 4}, Labels{1, 1, 0, 0}).eer, 1.0);
  // All scores tied.
  EXPECT_EQ(ComputeEer(std::vector<double>{5, 5, 5, 5}, Labels{1, 0, 1, 0}).eer, 0.5);
}

TEST(EerTest, InterleavedCaseMatchesExhaustiveSweep) {
  const std::vector<double> s{1, 3, 2, 4};
  const Labels y{1, 1, 0, 0};
  double best = 2.0;
  for (double t : MidpointThresholds(s)) {
    const Rates r = RatesAt(s, y, t);
    best = std::min(best, std::max(r.far, r.frr));
  }
  EXPECT_EQ(best, 0.5);
  EXPECT_EQ(ComputeEer(s, y).eer, best);
}

TEST(EerTest, Errors) {
  EXPECT_ERRC(ComputeEer(std::vector<double>{1, 2}, Labels{1, 1}), Errc::kDegenerate);
  EXPECT_ERRC(ComputeEer(std::vector<double>{1, 2}, Labels{0, 0}), Errc::kDegenerate);
  EXPECT_ERRC(ComputeEer(std::vector<double>{}, Labels{}), Errc::kDegenerate);
  EXPECT_ERRC(ComputeEer(std::vector<double>{1, 2}, Labels{1}), Errc::kDimensionMismatch);
  EXPECT_ERRC(ComputeEer(std::vector<double>{1, NAN}, Labels{1, 0}), Errc::kNonFinite);
}

TEST(EerTest, RandomScoresGiveChance) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  std::bernoulli_distribution coin(0.5);
  std::vector<double> s(20000);
  Labels y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = n(rng);
    y[i] = coin(rng);
  }
  EXPECT_NEAR(ComputeEer(s, y).eer, 0.5, 0.02);
}

// Random score sets with ties and unbalanced classes. Where some threshold
// gives FAR == FRR exactly, the EER must equal it; otherwise it must lie
// inside the bracket of the sign change.
TEST(EerTest, MatchesBruteForceMidpointSweep) {
  std::mt19937_64 rng(2024);
  int exact_cases = 0;
  for (int set = 0; set < 50; ++set) {
    // Even sets are balanced without ties, which forces an exact crossing; odd
    // sets are unbalanced with coarse ties.
    const int n = 2 * std::uniform_int_distribution<int>(1, 500)(rng);
    const int nt = set % 2 == 0 ? n / 2 : std::uniform_int_distribution<int>(1, n - 1)(rng);
    const double separation = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const double quant = set % 2 == 0 ? 1e6 : 10.0;
    std::normal_distribution<double> g;
    std::vector<double> s(static_cast<std::size_t>(n));
    Labels y(s.size());
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i < nt;
      s[static_cast<std::size_t>(i)] = std::round((g(rng) + (i < nt ? separation : 0.0)) * quant);
    }
    const long ntl = nt, nnl = n - nt;
    const double eer = ComputeEer(s, y).eer;

    bool exact = false;
    double exact_value = 0.0;
    std::vector<Rates> curve;
    for (double t : MidpointThresholds(s)) {
      const Rates r = RatesAt(s, y, t);
      curve.push_back(r);
      if (r.fa * ntl == r.fr * nnl) {
        exact = true;
        exact_value = r.far;
      }
    }
    if (exact) {
      ++exact_cases;
      EXPECT_NEAR(eer, exact_value, 1e-9) << "set " << set;
    } else {
      bool bracketed = false;
      for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
        const double d0 = curve[k].far - curve[k].frr;
        const double d1 = curve[k + 1].far - curve[k + 1].frr;
        if (d0 > 0 && d1 < 0) {
          const double lo = std::min({curve[k].far, curve[k].frr, curve[k + 1].far, curve[k + 1].frr});
          const double hi = std::max({curve[k].far, curve[k].frr, curve[k + 1].far, curve[k + 1].frr});
          bracketed = eer >= lo - 1e-12 && eer <= hi + 1e-12;
        }
      }
      EXPECT_TRUE(bracketed) << "set " << set;
    }
  }
  EXPECT_GE(exact_cases, 25);
}

TEST(EerTest, InvariantToMonotoneTransformAndMirror) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> s(501);
  Labels y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = i % 3 == 0;
    s[i] = g(rng) + (y[i] ? 1.0 : 0.0);
  }
  const double eer = ComputeEer(s, y).eer;
  std::vector<double> t(s.size()), neg(s.size());
  Labels swapped(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    t[i] = 3.0 * std::exp(s[i]) + 1.0;
    neg[i] = -s[i];
    swapped[i] = 1 - y[i];
  }
  EXPECT_EQ(ComputeEer(t, y).eer, eer);
  EXPECT_NEAR(ComputeEer(neg, swapped).eer, eer, 1e-12);
}

TEST(DetTest, MonotoneWithOnePointPerDistinctScore) {
  const std::vector<double> s{0.3, 0.1, 0.3, 0.9, -2.0, 0.5};
  const Labels y{1, 0, 0, 1, 0, 1};
  const auto det = DetPoints(s, y);
  ASSERT_EQ(det.size(), 6u);  // five distinct scores plus +inf
  EXPECT_EQ(det.front().far, 1.0);
  EXPECT_EQ(det.front().frr, 0.0);
  EXPECT_TRUE(std::isinf(det.back().threshold));
  EXPECT_EQ(det.back().far, 0.0);
  EXPECT_EQ(det.back().frr, 1.0);
  for (std::size_t k = 1; k < det.size(); ++k) {
    EXPECT_GT(det[k].threshold, det[k - 1].threshold);
    EXPECT_LE(det[k].far, det[k - 1].far);
    EXPECT_GE(det[k].frr, det[k - 1].frr);
    const Rates r = RatesAt(s, y, det[k].threshold);
    EXPECT_EQ(det[k].far, r.far);
    EXPECT_EQ(det[k].frr, r.frr);
  }
  std::ostringstream os;
  WriteDet(det, os);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

Protocol P(const std::string& name, std::vector<Trial> trials) { return {name, std::move(trials)}; }

TEST(ProtocolTest, MixAndUnion) {
  const Protocol a = P("a", {{"x", "y", true}, {"x", "z", false}, {"u", "v", true}});
  const Protocol b = P("b", {{"p", "q", false}, {"p", "r", true}});
  const Protocol mix = MixProtocols(a, b);
  ASSERT_EQ(mix.trials.size(), 3u);
  EXPECT_EQ(mix.trials[0], (Trial{"x", "y", true}));
  EXPECT_EQ(mix.trials[1], (Trial{"u", "v", true}));
  EXPECT_EQ(mix.trials[2], (Trial{"p", "q", false}));
  EXPECT_EQ(mix.num_targets(), 2u);
  const Protocol uni = UnionProtocols(a, b);
  EXPECT_EQ(uni.trials.size(), 5u);
  EXPECT_EQ(uni.trials[3], b.trials[0]);
  EXPECT_ERRC(MixProtocols(b, P("c", {{"a", "b", true}})), Errc::kDegenerate);
  EXPECT_ERRC(MixProtocols(P("c", {{"a", "b", false}}), b), Errc::kDegenerate);
  EXPECT_ERRC(RequireBothClasses(P("c", {{"a", "b", false}})), Errc::kDegenerate);
}

SynthOutput SharedSynth(int speakers, int groups, double beta, std::uint64_t seed) {
  SynthConfig c;
  c.num_speakers = speakers;
  c.shared_session_groups = groups;
  c.dimension = 32;
  c.windows_per_utterance = 2;
  c.beta = beta;
  c.sigma = 0.1;
  c.seed = seed;
  return Generate(c);
}

TEST(ConfoundProtocolTest, ClassesHaveTheirDefiningProperties) {
  const EmbeddingCorpus corpus = SharedSynth(10, 10, 1.0, 4).corpus;
  const Protocol p = MakeConfoundProtocol(corpus);
  RequireResolvable(p, corpus);
  EXPECT_EQ(p.num_targets(), p.num_nontargets());
  EXPECT_GT(p.num_targets(), 0u);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : p.trials) {
    const auto& a = corpus.at(t.enrol_id);
    const auto& b = corpus.at(t.test_id);
    EXPECT_NE(t.enrol_id, t.test_id);
    EXPECT_TRUE(seen.insert({t.enrol_id, t.test_id}).second);
    if (t.target) {
      EXPECT_EQ(a.speaker_id, b.speaker_id);
      EXPECT_NE(a.session_id, b.session_id);
    } else {
      EXPECT_NE(a.speaker_id, b.speaker_id);
      EXPECT_EQ(a.session_id, b.session_id);
    }
  }
  // 10 groups x 2 speakers x 4 utterances: each group session has 4 x 4
  // different-speaker pairs, fewer than the cross-session target pairs.
  EXPECT_EQ(p.num_nontargets(), 10u * 16u);
  // Deterministic.
  EXPECT_EQ(MakeConfoundProtocol(corpus).trials, p.trials);
}

TEST(ConfoundProtocolTest, ErrorsNameTheMissingClass) {
  const EmbeddingCorpus no_shared = SharedSynth(4, 0, 1.0, 1).corpus;
  const auto e = testing::CaptureErrc([&] { MakeConfoundProtocol(no_shared); });
  EXPECT_EQ(e, Errc::kDegenerate);
  try {
    MakeConfoundProtocol(no_shared);
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("same-session"), std::string::npos);
  }
}

TEST(ConfoundProtocolTest, HarderThanStandardProtocol) {
  const EmbeddingCorpus corpus = SharedSynth(20, 40, 1.5, 9).corpus;
  const TrialScorer scorer(corpus, nullptr);
  auto eer = [&](const Protocol& p) {
    std::vector<double> s;
    for (const auto& t : p.trials) s.push_back(scorer.Speaker(t.enrol_id, t.test_id));
    return ComputeEer(s, p.labels()).eer;
  };
  const Protocol confound = MakeConfoundProtocol(corpus);
  const Protocol standard = MakeStandardProtocol(corpus, 500, 500, 3);
  EXPECT_EQ(standard.num_targets(), 500u);
  EXPECT_GT(eer(confound), eer(standard) + 0.05);
}

TEST(StandardProtocolTest, DrawsValidPairsDeterministically) {
  const EmbeddingCorpus corpus = SharedSynth(6, 0, 1.0, 2).corpus;
  const Protocol p = MakeStandardProtocol(corpus, 50, 70, 8);
  EXPECT_EQ(p.num_targets(), 50u);
  EXPECT_EQ(p.num_nontargets(), 70u);
  for (const auto& t : p.trials) {
    EXPECT_EQ(corpus.at(t.enrol_id).speaker_id == corpus.at(t.test_id).speaker_id, t.target);
    EXPECT_NE(t.enrol_id, t.test_id);
  }
  EXPECT_EQ(MakeStandardProtocol(corpus, 50, 70, 8).trials, p.trials);
  EXPECT_NE(MakeStandardProtocol(corpus, 50, 70, 9).trials, p.trials);
}

TEST(ProtocolIoTest, RoundTripAndComments) {
  std::ostringstream os;
  WriteProtocol(P("x", {{"ab", "c", true}, {"d", "e", false}}), os);
  EXPECT_EQ(os.str(), "1 ab c\n0 d e\n");
  std::istringstream is("# header\n\n1 ab c\r\n0 d e\n");
  const Protocol back = ReadProtocol(is, "x");
  ASSERT_EQ(back.trials.size(), 2u);
  EXPECT_EQ(back.trials[0], (Trial{"ab", "c", true}));

  testing::TempDir dir;
  const Protocol q = P("q", {{"u1", "u2", true}, {"u1", "u3", false}});
  SaveProtocol(q, dir.file("t.txt"), "config-digest 0123");
  const std::string bytes = testing::ReadBytes(dir.file("t.txt"));
  EXPECT_EQ(bytes, "# config-digest 0123\n1 u1 u2\n0 u1 u3\n");
  EXPECT_EQ(LoadProtocol(dir.file("t.txt")).trials, q.trials);
  SaveProtocol(LoadProtocol(dir.file("t.txt")), dir.file("u.txt"), "config-digest 0123");
  EXPECT_EQ(testing::ReadBytes(dir.file("u.txt")), bytes);
}

TEST(ProtocolIoTest, MalformedLines) {
  for (const char* bad : {"2 a b\n", "1 a\n", "1 a b c\n", "yes a b\n"}) {
    std::istringstream is(bad);
    EXPECT_ERRC(ReadProtocol(is, "bad"), Errc::kInvalidArgument) << bad;
  }
  EXPECT_ERRC(LoadProtocol("/nonexistent/p.txt"), Errc::kIo);
}

}  // namespace
}  // namespace sesscomp
