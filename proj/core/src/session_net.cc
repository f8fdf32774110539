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

#include "sesscomp/error.h"
#include "sesscomp/optimizer.h"

namespace sesscomp {

void Validate(const SessionNetConfig& c) {
  if (c.embed_dim < 2) throw Error(Errc::kInvalidArgument, "session embed_dim must be >= 2");
  if (c.steps < 1) throw Error(Errc::kInvalidArgument, "session training steps must be >= 1");
  if (c.speakers_per_batch < 1) {
    throw Error(Errc::kInvalidArgument, "speakers_per_batch must be >= 1");
  }
  if (!(c.learning_rate > 0.0)) throw Error(Errc::kInvalidArgument, "learning_rate must be > 0");
}

NetworkSpec SessionNetSpec(const SessionNetConfig& c, int input_dim) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.output_dim = c.embed_dim;
  spec.hidden_dim = c.hidden_dim;
  spec.num_blocks = c.num_blocks;
  spec.activation = c.activation;
  spec.dropout_rate = c.dropout;
  spec.prenorm_residual = true;
  Validate(spec);
  return spec;
}

Embedding SessionModel::Extract(const EmbeddingRef& speaker_embedding) const {
  if (speaker_embedding.size() != spec.input_dim) {
    throw Error(Errc::kDimensionMismatch,
                "session network expects " + std::to_string(spec.input_dim) +
                    "-dim input, got " + std::to_string(speaker_embedding.size()));
  }
  return ForwardOne(params, spec, Embedding(speaker_embedding), ForwardMode::Eval());
}

Eigen::MatrixXd SessionModel::ExtractBatch(
    const Eigen::Ref<const Eigen::MatrixXd>& speaker_embeddings) const {
  return Forward(params, spec, speaker_embeddings, ForwardMode::Eval());
}

QuadrupleSampler::QuadrupleSampler(const EmbeddingCorpus& corpus) {
  // speaker -> (session, augmentation) -> records, in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::vector<std::size_t>>>
      groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.record(i);
    if (!groups.count(r.speaker_id)) order.push_back(r.speaker_id);
    groups[r.speaker_id][{r.session_id, r.augmentation_id}].push_back(i);
  }
  for (const auto& speaker : order) {
    Candidate cand;
    std::vector<std::string> augs;
    for (const auto& [key, recs] : groups[speaker]) {
      if (recs.size() < 2) continue;
      cand.units.push_back(Unit{key.first, recs});
      augs.push_back(key.second);
    }
    for (std::size_t a = 0; a < cand.units.size(); ++a) {
      for (std::size_t b = a + 1; b < cand.units.size(); ++b) {
        if (cand.units[a].session == cand.units[b].session) continue;
        if (!augs[a].empty() && !augs[b].empty() && augs[a] == augs[b]) continue;
        cand.pairs.emplace_back(a, b);
      }
    }
    if (!cand.pairs.empty()) {
      speakers_.push_back(speaker);
      candidates_.push_back(std::move(cand));
    }
  }
  if (speakers_.empty()) {
    throw Error(Errc::kDegenerate,
                "no eligible speaker for quadruple sampling: need a speaker with two "
                "sessions, each holding two utterances with a shared augmentation tag, "
                "and distinct tags across the sessions");
  }
}

Quadruple QuadrupleSampler::Sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick_speaker(0, speakers_.size() - 1);
  const std::size_t s = pick_speaker(rng);
  const Candidate& cand = candidates_[s];
  std::uniform_int_distribution<std::size_t> pick_pair(0, cand.pairs.size() - 1);
  const auto [ua, ub] = cand.pairs[pick_pair(rng)];

  Quadruple q;
  q.speaker_id = speakers_[s];
  const std::array<const Unit*, 2> units{&cand.units[ua], &cand.units[ub]};
  for (int k = 0; k < 2; ++k) {
    const auto& recs = units[k]->records;
    std::uniform_int_distribution<std::size_t> first(0, recs.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, recs.size() - 2);
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    q.sessions[k] = units[k]->session;
    q.records[k] = {recs[i], recs[j]};
  }
  return q;
}

Quadruple SampleQuadruple(const EmbeddingCorpus& corpus, std::mt19937_64& rng) {
  return QuadrupleSampler(corpus).Sample(rng);
}

double PairLoss(const EmbeddingRef& a, const EmbeddingRef& b, bool same_session) {
  const double c = Cosine(a, b);
  return same_session ? 1.0 - c : c;
}

double QuadrupleLoss(const Eigen::Ref<const Eigen::MatrixXd>& e, Eigen::MatrixXd* grad) {
  if (e.cols() != 4) {
    throw Error(Errc::kDimensionMismatch, "quadruple loss expects four embeddings");
  }
  constexpr double kWeight = 1.0 / kQuadruplePairs.size();
  if (grad != nullptr) *grad = Eigen::MatrixXd::Zero(e.rows(), 4);
  double loss = 0.0;
  for (const auto& p : kQuadruplePairs) {
    const auto a = e.col(p.first);
    const auto b = e.col(p.second);
    const double c = Cosine(a, b);
    loss += kWeight * (p.same_session ? 1.0 - c : c);
    if (grad != nullptr) {
      const double na = a.norm();
      const double nb = b.norm();
      const double sign = p.same_session ? -kWeight : kWeight;
      grad->col(p.first) += sign * (b / (na * nb) - c * a / (na * na));
      grad->col(p.second) += sign * (a / (na * nb) - c * b / (nb * nb));
    }
  }
  return loss;
}

namespace {

Eigen::MatrixXd GatherInputs(const std::vector<Quadruple>& batch,
                             const std::vector<Embedding>& inputs) {
  const Eigen::Index d = inputs.empty() ? 0 : inputs.front().size();
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(4 * batch.size()));
  for (std::size_t q = 0; q < batch.size(); ++q) {
    for (int k = 0; k < 4; ++k) {
      x.col(static_cast<Eigen::Index>(4 * q + k)) = inputs[batch[q].records[k / 2][k % 2]];
    }
  }
  return x;
}

double LossOnInputs(const std::vector<Quadruple>& batch, const Eigen::MatrixXd& x,
                    const SessionModel& model, ForwardMode mode, NetworkParams* grads) {
  ForwardCache cache;
  const Eigen::MatrixXd out =
      Forward(model.params, model.spec, x, mode, grads != nullptr ? &cache : nullptr);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd grad_out;
  if (grads != nullptr) grad_out.resize(out.rows(), out.cols());
  double loss = 0.0;
  for (std::size_t q = 0; q < batch.size(); ++q) {
    Eigen::MatrixXd g;
    loss += scale * QuadrupleLoss(out.middleCols(static_cast<Eigen::Index>(4 * q), 4),
                                  grads != nullptr ? &g : nullptr);
    if (grads != nullptr) grad_out.middleCols(static_cast<Eigen::Index>(4 * q), 4) = scale * g;
  }
  if (grads != nullptr) *grads = Backward(model.params, model.spec, cache, grad_out);
  return loss;
}

}  // namespace

double BatchLoss(const std::vector<Quadruple>& batch, const EmbeddingCorpus& corpus,
                 const SessionModel& model, ForwardMode mode, NetworkParams* grads) {
  if (batch.empty()) throw Error(Errc::kInvalidArgument, "empty quadruple batch");
  Eigen::MatrixXd x(corpus.dimension(), static_cast<Eigen::Index>(4 * batch.size()));
  for (std::size_t q = 0; q < batch.size(); ++q) {
    for (int k = 0; k < 4; ++k) {
      x.col(static_cast<Eigen::Index>(4 * q + k)) =
          corpus.record(batch[q].records[k / 2][k % 2]).Pooled();
    }
  }
  return LossOnInputs(batch, x, model, mode, grads);
}

double BatchLoss(const Quadruple& quadruple, const EmbeddingCorpus& corpus,
                 const SessionModel& model) {
  return BatchLoss(std::vector<Quadruple>{quadruple}, corpus, model);
}

SessionTrainResult TrainSessionNet(const EmbeddingCorpus& corpus,
                                   const SessionNetConfig& config) {
  Validate(config);
  const QuadrupleSampler sampler(corpus);
  SessionTrainResult result;
  result.model.spec = SessionNetSpec(config, corpus.dimension());
  result.model.params = InitParams(result.model.spec, config.seed);

  std::vector<Embedding> pooled;
  pooled.reserve(corpus.size());
  for (const auto& r : corpus.records()) pooled.push_back(r.Pooled());

  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  OptimizerState opt = MakeOptimizer(result.model.spec, adam);
  std::mt19937_64 rng(config.seed ^ 0x5E55C0DEull);
  std::uniform_int_distribution<int> pick_window(0, corpus.windows_per_utterance() - 1);

  std::vector<Quadruple> batch(static_cast<std::size_t>(config.speakers_per_batch));
  result.loss_curve.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    for (auto& q : batch) q = sampler.Sample(rng);
    Eigen::MatrixXd x;
    if (config.window_inputs) {
      x.resize(corpus.dimension(), static_cast<Eigen::Index>(4 * batch.size()));
      for (std::size_t q = 0; q < batch.size(); ++q) {
        for (int k = 0; k < 4; ++k) {
          x.col(static_cast<Eigen::Index>(4 * q + k)) =
              corpus.record(batch[q].records[k / 2][k % 2]).windows.col(pick_window(rng));
        }
      }
    } else {
      x = GatherInputs(batch, pooled);
    }
    NetworkParams grads;
    const double loss = LossOnInputs(batch, x, result.model,
                                     ForwardMode::Train(rng()), &grads);
    if (!std::isfinite(loss) || !AllFinite(grads)) {
      throw Error(Errc::kNonFinite,
                  "session training diverged at step " + std::to_string(step) +
                      " (loss " + std::to_string(loss) + ")");
    }
    OptimizerStep(result.model.params, grads, opt);
    result.loss_curve.push_back(loss);
  }
  return result;
}

SessionSeparation MeasureSeparation(const EmbeddingCorpus& corpus, const SessionModel& model) {
  Eigen::MatrixXd pooled(corpus.dimension(), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    pooled.col(static_cast<Eigen::Index>(i)) = corpus.record(i).Pooled();
  }
  const Eigen::MatrixXd se = model.ExtractBatch(pooled);

  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus.record(i).speaker_id].push_back(i);
  }
  SessionSeparation out;
  double same_sum = 0.0;
  double cross_sum = 0.0;
  for (const auto& [speaker, recs] : by_speaker) {
    for (std::size_t a = 0; a < recs.size(); ++a) {
      for (std::size_t b = a + 1; b < recs.size(); ++b) {
        const double c = Cosine(se.col(static_cast<Eigen::Index>(recs[a])),
                                se.col(static_cast<Eigen::Index>(recs[b])));
        if (corpus.record(recs[a]).session_id == corpus.record(recs[b]).session_id) {
          same_sum += c;
          ++out.same_pairs;
        } else {
          cross_sum += c;
          ++out.cross_pairs;
        }
      }
    }
  }
  if (out.same_pairs == 0 || out.cross_pairs == 0) {
    throw Error(Errc::kDegenerate, "separation needs same- and cross-session pairs");
  }
  out.mean_same_session = same_sum / static_cast<double>(out.same_pairs);
  out.mean_cross_session = cross_sum / static_cast<double>(out.cross_pairs);
  return out;
}

}  // namespace sesscomp
