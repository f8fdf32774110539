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

#include "sesscomp/session_net.h"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "gradient_check.h"
#include "gtest_util.h"
#include "sesscomp/corpus_io.h"
#include "sesscomp/synthgen.h"

namespace sesscomp {
namespace {

using testing::Flatten;
using testing::NumericGradient;
using testing::RelativeError;

void AddUtt(EmbeddingCorpus& c, const std::string& spk, const std::string& sess,
            const std::string& aug, int k, const Embedding& v) {
  UtteranceRecord r;
  r.utterance_id = sess + "-u" + std::to_string(k);
  r.speaker_id = spk;
  r.session_id = sess;
  r.augmentation_id = aug;
  r.windows = v;
  c.Add(r);
}

Embedding Vec(std::initializer_list<double> xs) {
  Embedding v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

EmbeddingCorpus SmallSynth(double beta, double sigma, int speakers, std::uint64_t seed) {
  SynthConfig c;
  c.num_speakers = speakers;
  c.dimension = 16;
  c.windows_per_utterance = 3;
  c.beta = beta;
  c.sigma = sigma;
  c.seed = seed;
  return Generate(c).corpus;
}

// Linear identity map, so session embeddings equal the pooled inputs.
SessionModel IdentityModel(int dim) {
  SessionModel m;
  m.spec = NetworkSpec{dim, dim, dim, 0, Activation::kLeakyRelu, 1.0, 0.0, false};
  m.params = ZeroParams(m.spec);
  m.params.input.weight.setIdentity();
  m.params.output.weight.setIdentity();
  return m;
}

TEST(PairLossTest, Examples) {
  const Embedding a = Vec({1, 2, 3});
  EXPECT_NEAR(PairLoss(a, a, true), 0.0, 1e-15);
  EXPECT_NEAR(PairLoss(a, a, false), 1.0, 1e-15);
  EXPECT_NEAR(PairLoss(a, -a, true), 2.0, 1e-15);
  EXPECT_NEAR(PairLoss(a, -a, false), -1.0, 1e-15);
  EXPECT_NEAR(PairLoss(Vec({1, 0}), Vec({0, 1}), true), 1.0, 1e-15);
  EXPECT_ERRC(PairLoss(a, Vec({1, 2}), true), Errc::kDimensionMismatch);
}

TEST(PairLossTest, Bounds) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 10000; ++i) {
    Embedding a(8), b(8);
    for (int k = 0; k < 8; ++k) {
      a[k] = n(rng);
      b[k] = n(rng);
    }
    const double same = PairLoss(a, b, true);
    const double cross = PairLoss(a, b, false);
    ASSERT_GE(same, 0.0);
    ASSERT_LE(same, 2.0);
    ASSERT_GE(cross, -1.0);
    ASSERT_LE(cross, 1.0);
    ASSERT_NEAR(same + cross, 1.0, 1e-12);
  }
}

TEST(QuadrupleLossTest, HandCases) {
  Eigen::MatrixXd same(3, 4);
  same.colwise() = Vec({1, -1, 2});
  // Same-session pairs cost 0, the four cross pairs cost 1 each.
  EXPECT_NEAR(QuadrupleLoss(same), 4.0 / 6.0, 1e-15);
  Eigen::MatrixXd ideal(3, 4);
  ideal << 1, 2, 0, 0,
           0, 0, 3, 1,
           0, 0, 0, 0;
  EXPECT_NEAR(QuadrupleLoss(ideal), 0.0, 1e-15);
  EXPECT_ERRC(QuadrupleLoss(Eigen::MatrixXd::Ones(3, 3)), Errc::kDimensionMismatch);
}

TEST(QuadrupleLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd e(5, 4);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = n(rng);
    Eigen::MatrixXd g;
    QuadrupleLoss(e, &g);
    std::vector<double> a, f;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      Eigen::MatrixXd up = e, down = e;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      f.push_back((QuadrupleLoss(up) - QuadrupleLoss(down)) / 2e-6);
      a.push_back(g.data()[i]);
    }
    EXPECT_LT(RelativeError(a, f), 1e-7);
  }
}

TEST(SamplerTest, SingleEligibleSpeaker) {
  EmbeddingCorpus c(2, 1);
  AddUtt(c, "A", "A-s0", "", 0, Vec({1, 0}));
  AddUtt(c, "A", "A-s0", "", 1, Vec({1, 0.1}));
  AddUtt(c, "A", "A-s1", "", 0, Vec({0, 1}));
  AddUtt(c, "A", "A-s1", "", 1, Vec({0.1, 1}));
  AddUtt(c, "B", "B-s0", "", 0, Vec({1, 1}));
  AddUtt(c, "B", "B-s0", "", 1, Vec({1, 2}));
  AddUtt(c, "C", "C-s0", "", 0, Vec({1, 3}));
  AddUtt(c, "C", "C-s1", "", 0, Vec({1, 4}));
  const QuadrupleSampler sampler(c);
  ASSERT_EQ(sampler.eligible_speakers(), std::vector<std::string>{"A"});
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Quadruple q = sampler.Sample(rng);
    EXPECT_EQ(q.speaker_id, "A");
    EXPECT_NE(q.sessions[0], q.sessions[1]);
    for (int s = 0; s < 2; ++s) {
      EXPECT_NE(q.records[s][0], q.records[s][1]);
      for (int u = 0; u < 2; ++u) {
        EXPECT_EQ(c.record(q.records[s][u]).session_id, q.sessions[s]);
        EXPECT_EQ(c.record(q.records[s][u]).speaker_id, "A");
      }
    }
  }
}

TEST(SamplerTest, UniformOverSpeakers) {
  const EmbeddingCorpus c = SmallSynth(1.0, 0.1, 5, 3);
  const QuadrupleSampler sampler(c);
  ASSERT_EQ(sampler.eligible_speakers().size(), 5u);
  std::map<std::string, int> counts;
  std::mt19937_64 rng(11);
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++counts[sampler.Sample(rng).speaker_id];
  const double sd = std::sqrt(kDraws * 0.2 * 0.8);
  for (const auto& [spk, n] : counts) EXPECT_NEAR(n, kDraws / 5.0, 5 * sd) << spk;
}

TEST(SamplerTest, AugmentationTagsMustDiffer) {
  EmbeddingCorpus c(2, 1);
  AddUtt(c, "A", "A-s0", "reverb", 0, Vec({1, 0}));
  AddUtt(c, "A", "A-s0", "reverb", 1, Vec({1, 0.1}));
  AddUtt(c, "A", "A-s1", "reverb", 0, Vec({0, 1}));
  AddUtt(c, "A", "A-s1", "reverb", 1, Vec({0.1, 1}));
  EXPECT_ERRC(QuadrupleSampler{c}, Errc::kDegenerate);
  AddUtt(c, "A", "A-s2", "noise", 0, Vec({1, 1}));
  AddUtt(c, "A", "A-s2", "noise", 1, Vec({1, 2}));
  const QuadrupleSampler sampler(c);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Quadruple q = sampler.Sample(rng);
    EXPECT_NE(c.record(q.records[0][0]).augmentation_id, c.record(q.records[1][0]).augmentation_id);
  }
}

TEST(SamplerTest, SingleSessionCorpusIsRejected) {
  EmbeddingCorpus c(2, 1);
  for (int k = 0; k < 4; ++k) AddUtt(c, "A", "A-s0", "", k, Vec({1, 0.1 * k}));
  EXPECT_ERRC(QuadrupleSampler{c}, Errc::kDegenerate);
  SessionNetConfig config;
  config.steps = 1;
  EXPECT_ERRC(TrainSessionNet(c, config), Errc::kDegenerate);
}

TEST(BatchLossTest, MatchesEnumeratedPairs) {
  EmbeddingCorpus c(3, 1);
  const std::vector<Embedding> v{Vec({1, 0, 0}), Vec({1, 1, 0}), Vec({0, 1, 1}), Vec({-1, 0, 2}),
                                 Vec({2, 1, 1}), Vec({0, 0, 1}), Vec({1, -1, 0}), Vec({3, 1, 0})};
  for (int i = 0; i < 8; ++i) {
    AddUtt(c, i < 4 ? "A" : "B", std::string(i < 4 ? "A" : "B") + "-s" + std::to_string(i % 4 / 2),
           "", i % 2, v[static_cast<std::size_t>(i)]);
  }
  const SessionModel identity = IdentityModel(3);
  auto cosine = [](const Embedding& a, const Embedding& b) {
    return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  };
  std::vector<Quadruple> batch(2);
  double expected = 0.0;
  for (int q = 0; q < 2; ++q) {
    const std::size_t base = 4 * static_cast<std::size_t>(q);
    batch[q].records = {{{base, base + 1}, {base + 2, base + 3}}};
    double l = 0.0;
    for (std::size_t i = base; i < base + 4; ++i) {
      for (std::size_t j = i + 1; j < base + 4; ++j) {
        const bool same = (i - base) / 2 == (j - base) / 2;
        const double cs = cosine(v[i], v[j]);
        l += same ? 1.0 - cs : cs;
      }
    }
    expected += l / 6.0 / 2.0;
  }
  EXPECT_NEAR(BatchLoss(batch, c, identity), expected, 1e-14);
  EXPECT_NEAR(BatchLoss(batch[0], c, identity) + BatchLoss(batch[1], c, identity),
              2.0 * expected, 1e-14);
  EXPECT_ERRC(BatchLoss(std::vector<Quadruple>{}, c, identity), Errc::kInvalidArgument);
}

TEST(BatchLossTest, ParameterGradientMatchesFiniteDifferences) {
  const EmbeddingCorpus c = SmallSynth(1.0, 0.2, 4, 8);
  const QuadrupleSampler sampler(c);
  std::mt19937_64 rng(4);
  std::vector<Quadruple> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(sampler.Sample(rng));
  for (bool dropout : {false, true}) {
    SessionNetConfig config;
    config.hidden_dim = 12;
    config.num_blocks = 2;
    config.embed_dim = 6;
    config.dropout = dropout ? 0.2 : 0.0;
    SessionModel m{SessionNetSpec(config, 16), {}};
    m.params = InitParams(m.spec, 6);
    const ForwardMode mode = dropout ? ForwardMode::Train(77) : ForwardMode::Eval();
    NetworkParams grads;
    BatchLoss(batch, c, m, mode, &grads);
    const auto fd = NumericGradient(m.params, [&] { return BatchLoss(batch, c, m, mode); });
    EXPECT_LT(RelativeError(Flatten(grads), fd), 1e-5) << dropout;
  }
}

SessionNetConfig TinyConfig(int steps) {
  SessionNetConfig config;
  config.hidden_dim = 32;
  config.num_blocks = 1;
  config.embed_dim = 8;
  config.steps = steps;
  config.speakers_per_batch = 8;
  config.seed = 123;
  return config;
}

TEST(TrainSessionNetTest, LossDecreases) {
  const EmbeddingCorpus c = SmallSynth(2.0, 0.1, 12, 21);
  const auto result = TrainSessionNet(c, TinyConfig(300));
  ASSERT_EQ(result.loss_curve.size(), 300u);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 30; ++i) {
    head += result.loss_curve[static_cast<std::size_t>(i)];
    tail += result.loss_curve[result.loss_curve.size() - 1 - static_cast<std::size_t>(i)];
  }
  EXPECT_LT(tail, 0.7 * head);
}

TEST(TrainSessionNetTest, DeterministicAndCorpusUntouched) {
  const EmbeddingCorpus c = SmallSynth(1.0, 0.1, 6, 2);
  std::stringstream before;
  WriteCorpus(c, before);
  const auto a = TrainSessionNet(c, TinyConfig(20));
  const auto b = TrainSessionNet(c, TinyConfig(20));
  EXPECT_EQ(Flatten(a.model.params), Flatten(b.model.params));
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  SessionNetConfig other = TinyConfig(20);
  other.seed = 124;
  EXPECT_NE(Flatten(TrainSessionNet(c, other).model.params), Flatten(a.model.params));
  std::stringstream after;
  WriteCorpus(c, after);
  EXPECT_EQ(before.str(), after.str());
}

TEST(TrainSessionNetTest, InvalidConfig) {
  const EmbeddingCorpus c = SmallSynth(1.0, 0.1, 4, 2);
  EXPECT_ERRC(TrainSessionNet(c, TinyConfig(0)), Errc::kInvalidArgument);
  SessionNetConfig config = TinyConfig(5);
  config.speakers_per_batch = 0;
  EXPECT_ERRC(TrainSessionNet(c, config), Errc::kInvalidArgument);
  config = TinyConfig(5);
  config.learning_rate = -1.0;
  EXPECT_ERRC(TrainSessionNet(c, config), Errc::kInvalidArgument);
}

TEST(SessionModelTest, ExtractionIsDeterministicAndChecked) {
  SessionNetConfig config = TinyConfig(1);
  config.dropout = 0.5;
  SessionModel m{SessionNetSpec(config, 16), {}};
  m.params = InitParams(m.spec, 1);
  const Embedding x = Embedding::LinSpaced(16, -1, 1);
  const Embedding e = m.Extract(x);
  EXPECT_EQ(e.size(), 8);
  EXPECT_EQ(m.Extract(x), e);
  Eigen::MatrixXd batch(16, 2);
  batch.col(0) = x;
  batch.col(1) = 2 * x;
  EXPECT_EQ(Embedding(m.ExtractBatch(batch).col(0)), e);
  EXPECT_ERRC(m.Extract(Embedding::Ones(15)), Errc::kDimensionMismatch);
}

TEST(SeparationTest, GroundTruthSessionsSeparate) {
  EmbeddingCorpus c(3, 1);
  AddUtt(c, "A", "A-s0", "", 0, Vec({1, 0, 0}));
  AddUtt(c, "A", "A-s0", "", 1, Vec({2, 0, 0}));
  AddUtt(c, "A", "A-s1", "", 0, Vec({0, 1, 0}));
  const auto sep = MeasureSeparation(c, IdentityModel(3));
  EXPECT_EQ(sep.same_pairs, 1u);
  EXPECT_EQ(sep.cross_pairs, 2u);
  EXPECT_NEAR(sep.gap(), 1.0, 1e-15);
}

}  // namespace
}  // namespace sesscomp
