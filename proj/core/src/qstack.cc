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

#include "sesscomp/qstack.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "sesscomp/binary_io.h"
#include "sesscomp/error.h"
#include "sesscomp/optimizer.h"

namespace sesscomp {
namespace {

Eigen::MatrixXd UnitColumns(Eigen::MatrixXd m, const std::string& id) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double n = m.col(j).norm();
    if (n == 0.0) throw Error(Errc::kDegenerate, "zero-norm window embedding in " + id);
    m.col(j) /= n;
  }
  return m;
}

void FillBlock(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double* out) {
  for (int i = 0; i < kQStackWindows; ++i) {
    for (int j = 0; j < kQStackWindows; ++j) {
      out[i * kQStackWindows + j] = std::clamp(a.col(i).dot(b.col(j)), -1.0, 1.0);
    }
  }
}

}  // namespace

FeatureBuilder::FeatureBuilder(std::vector<ModelView> views) : views_(std::move(views)) {
  if (views_.empty()) throw Error(Errc::kInvalidArgument, "feature builder needs a model");
  for (const auto& v : views_) {
    if (v.corpus == nullptr || v.session == nullptr) {
      throw Error(Errc::kInvalidArgument, "model view without corpus or session network");
    }
    if (v.corpus->windows_per_utterance() != kQStackWindows) {
      throw Error(Errc::kDimensionMismatch,
                  "stacked features need exactly 10 windows per utterance, corpus has " +
                      std::to_string(v.corpus->windows_per_utterance()));
    }
    if (v.session->spec.input_dim != v.corpus->dimension()) {
      throw Error(Errc::kDimensionMismatch, "session network does not match corpus dimension");
    }
    Cached c{v.corpus, {}, {}};
    c.speaker.reserve(v.corpus->size());
    c.session.reserve(v.corpus->size());
    for (const auto& r : v.corpus->records()) {
      c.speaker.push_back(UnitColumns(r.windows, r.utterance_id));
      c.session.push_back(UnitColumns(v.session->ExtractBatch(r.windows), r.utterance_id));
    }
    cache_.push_back(std::move(c));
  }
}

Eigen::VectorXd FeatureBuilder::Build(const std::string& enrol_id,
                                      const std::string& test_id) const {
  Eigen::VectorXd f(feature_dim());
  for (std::size_t m = 0; m < cache_.size(); ++m) {
    const auto& c = cache_[m];
    const std::size_t a = c.corpus->IndexOf(enrol_id);
    const std::size_t b = c.corpus->IndexOf(test_id);
    double* base = f.data() + m * kQStackFeaturesPerModel;
    FillBlock(c.speaker[a], c.speaker[b], base);
    FillBlock(c.session[a], c.session[b], base + kQStackBlock);
  }
  return f;
}

void QStackDataset::Add(const Eigen::VectorXd& row, bool target) {
  if (labels.empty() && features.cols() == 0 && feature_dim == 0) {
    feature_dim = static_cast<int>(row.size());
  }
  if (row.size() != feature_dim) {
    throw Error(Errc::kDimensionMismatch,
                "feature row of length " + std::to_string(row.size()) + ", expected " +
                    std::to_string(feature_dim));
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (features.rows() != feature_dim || features.cols() <= n) {
    features.conservativeResize(feature_dim, std::max<Eigen::Index>(2 * n, 16));
  }
  features.col(n) = row;
  labels.push_back(target ? 1 : 0);
}

void QStackDataset::Reserve(std::size_t n) {
  if (feature_dim > 0 && features.cols() < static_cast<Eigen::Index>(n)) {
    features.conservativeResize(feature_dim, static_cast<Eigen::Index>(n));
  }
}

QStackDataset BuildDataset(const FeatureBuilder& builder, const Protocol& protocol) {
  QStackDataset data;
  data.feature_dim = builder.feature_dim();
  data.Reserve(protocol.trials.size());
  for (const auto& t : protocol.trials) data.Add(builder.Build(t.enrol_id, t.test_id), t.target);
  data.features.conservativeResize(data.feature_dim, static_cast<Eigen::Index>(data.size()));
  return data;
}

void Validate(const QStackConfig& c) {
  if (c.hidden_dim < 1) throw Error(Errc::kInvalidArgument, "qstack hidden_dim must be >= 1");
  if (c.steps < 1) throw Error(Errc::kInvalidArgument, "qstack steps must be >= 1");
  if (c.batch_size < 2) throw Error(Errc::kInvalidArgument, "qstack batch_size must be >= 2");
  if (!(c.learning_rate > 0.0)) throw Error(Errc::kInvalidArgument, "learning_rate must be > 0");
}

NetworkSpec QStackSpec(int feature_dim, const QStackConfig& c) {
  NetworkSpec spec;
  spec.input_dim = feature_dim;
  spec.output_dim = 2;
  spec.hidden_dim = c.hidden_dim;
  spec.num_blocks = 1;
  spec.activation = Activation::kLeakyRelu;
  spec.leaky_slope = c.leaky_slope;
  spec.dropout_rate = c.dropout;
  spec.prenorm_residual = false;
  Validate(spec);
  return spec;
}

double CrossEntropy(const Eigen::Ref<const Eigen::MatrixXd>& logits,
                    std::span<const std::uint8_t> labels, Eigen::MatrixXd* grad) {
  if (logits.rows() != 2 || static_cast<std::size_t>(logits.cols()) != labels.size()) {
    throw Error(Errc::kDimensionMismatch, "cross-entropy expects 2 x N logits and N labels");
  }
  const double scale = 1.0 / static_cast<double>(labels.size());
  if (grad != nullptr) grad->resize(2, logits.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double e0 = std::exp(logits(0, j) - mx);
    const double e1 = std::exp(logits(1, j) - mx);
    const double lse = mx + std::log(e0 + e1);
    const int y = labels[static_cast<std::size_t>(j)] ? 1 : 0;
    loss += scale * (lse - logits(y, j));
    if (grad != nullptr) {
      (*grad)(0, j) = scale * (e0 / (e0 + e1) - (y == 0 ? 1.0 : 0.0));
      (*grad)(1, j) = scale * (e1 / (e0 + e1) - (y == 1 ? 1.0 : 0.0));
    }
  }
  return loss;
}

Eigen::VectorXd PermuteWindows(const Eigen::VectorXd& features,
                               const std::array<int, kQStackWindows>& enrol_order,
                               const std::array<int, kQStackWindows>& test_order,
                               bool swap_sides) {
  if (features.size() % kQStackBlock != 0) {
    throw Error(Errc::kDimensionMismatch, "feature length is not a multiple of 100");
  }
  Eigen::VectorXd out(features.size());
  for (Eigen::Index base = 0; base < features.size(); base += kQStackBlock) {
    for (int i = 0; i < kQStackWindows; ++i) {
      for (int j = 0; j < kQStackWindows; ++j) {
        const int src = swap_sides ? test_order[j] * kQStackWindows + enrol_order[i]
                                   : enrol_order[i] * kQStackWindows + test_order[j];
        out[base + i * kQStackWindows + j] = features[base + src];
      }
    }
  }
  return out;
}

QStackModel TrainQStack(const QStackDataset& dev, const QStackConfig& config, int num_models,
                        std::vector<double>* loss_curve) {
  Validate(config);
  std::vector<Eigen::Index> pos;
  std::vector<Eigen::Index> neg;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    (dev.labels[i] ? pos : neg).push_back(static_cast<Eigen::Index>(i));
  }
  if (pos.empty() || neg.empty()) {
    throw Error(Errc::kDegenerate, "Q-stack training needs both target and nontarget examples");
  }
  if (dev.features.rows() != dev.feature_dim) {
    throw Error(Errc::kDimensionMismatch, "dataset feature matrix does not match feature_dim");
  }
  if (num_models < 1 || dev.feature_dim != kQStackFeaturesPerModel * num_models) {
    throw Error(Errc::kDimensionMismatch,
                "feature length " + std::to_string(dev.feature_dim) + " does not match " +
                    std::to_string(num_models) + " model(s)");
  }

  QStackModel model;
  model.num_models = num_models;
  model.spec = QStackSpec(dev.feature_dim, config);
  model.params = InitParams(model.spec, config.seed);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  OptimizerState opt = MakeOptimizer(model.spec, adam);

  std::mt19937_64 rng(config.seed ^ 0x0A57ACCull);
  std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
  const int half = config.batch_size / 2;
  Eigen::MatrixXd x(dev.feature_dim, 2 * half);
  std::vector<std::uint8_t> y(static_cast<std::size_t>(2 * half));
  std::array<int, kQStackWindows> enrol_order;
  std::array<int, kQStackWindows> test_order;
  std::iota(enrol_order.begin(), enrol_order.end(), 0);
  std::iota(test_order.begin(), test_order.end(), 0);
  std::bernoulli_distribution coin(0.5);
  auto draw = [&](Eigen::Index col) -> Eigen::VectorXd {
    if (!config.permute_windows) return dev.features.col(col);
    std::shuffle(enrol_order.begin(), enrol_order.end(), rng);
    std::shuffle(test_order.begin(), test_order.end(), rng);
    return PermuteWindows(dev.features.col(col), enrol_order, test_order, coin(rng));
  };
  for (int step = 0; step < config.steps; ++step) {
    for (int k = 0; k < half; ++k) {
      x.col(2 * k) = draw(pos[pick_pos(rng)]);
      y[static_cast<std::size_t>(2 * k)] = 1;
      x.col(2 * k + 1) = draw(neg[pick_neg(rng)]);
      y[static_cast<std::size_t>(2 * k + 1)] = 0;
    }
    ForwardCache cache;
    const Eigen::MatrixXd logits =
        Forward(model.params, model.spec, x, ForwardMode::Train(rng()), &cache);
    Eigen::MatrixXd grad;
    const double loss = CrossEntropy(logits, y, &grad);
    if (!std::isfinite(loss)) {
      throw Error(Errc::kNonFinite, "Q-stack training diverged at step " + std::to_string(step));
    }
    OptimizerStep(model.params, Backward(model.params, model.spec, cache, grad), opt);
    if (loss_curve != nullptr) loss_curve->push_back(loss);
  }
  return model;
}

double QStackScore(const QStackModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.spec.input_dim) {
    throw Error(Errc::kDimensionMismatch,
                "Q-stack expects " + std::to_string(model.spec.input_dim) +
                    " features, got " + std::to_string(features.size()));
  }
  const Eigen::VectorXd logits = ForwardOne(model.params, model.spec, features);
  return logits[1] - logits[0];
}

std::vector<double> QStackScores(const QStackModel& model, const QStackDataset& data) {
  if (data.feature_dim != model.spec.input_dim) {
    throw Error(Errc::kDimensionMismatch, "Q-stack feature length mismatch");
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::MatrixXd logits =
      Forward(model.params, model.spec, data.features.leftCols(n), ForwardMode::Eval());
  std::vector<double> out(data.size());
  for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = logits(1, j) - logits(0, j);
  return out;
}

double QStackPosterior(const QStackModel& model, const Eigen::VectorXd& features) {
  return 1.0 / (1.0 + std::exp(-QStackScore(model, features)));
}

Checkpoint ToCheckpoint(const QStackModel& model) {
  return Checkpoint{NetworkKind::kQStack, static_cast<std::uint32_t>(model.num_models),
                    model.spec, model.params};
}

QStackModel FromCheckpoint(const Checkpoint& ck) {
  if (ck.kind != NetworkKind::kQStack) {
    throw Error(Errc::kInvalidArgument, "checkpoint is not a Q-stack classifier");
  }
  if (ck.spec.output_dim != 2 ||
      ck.spec.input_dim != kQStackFeaturesPerModel * static_cast<int>(ck.num_models)) {
    throw Error(Errc::kDimensionMismatch, "Q-stack checkpoint has inconsistent shape");
  }
  return QStackModel{ck.spec, ck.params, static_cast<int>(ck.num_models)};
}

void WriteFeatures(const QStackDataset& data, std::ostream& os) {
  BinaryWriter w(os);
  w.Magic(std::string_view(kFeatureMagic, 8));
  w.U32(static_cast<std::uint32_t>(data.feature_dim));
  w.U64(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    w.U8(data.labels[i]);
    const auto col = data.features.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index k = 0; k < col.size(); ++k) w.F64(col[k]);
  }
}

QStackDataset ReadFeatures(std::istream& is) {
  BinaryReader r(is, "feature dump");
  r.ExpectMagic(std::string_view(kFeatureMagic, 8));
  QStackDataset data;
  data.feature_dim = static_cast<int>(r.U32());
  const std::uint64_t n = r.U64();
  Eigen::VectorXd row(data.feature_dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint8_t label = r.U8();
    if (label > 1) throw Error(Errc::kInvalidArgument, "feature dump label byte must be 0 or 1");
    for (int k = 0; k < data.feature_dim; ++k) {
      row[k] = r.F64();
      if (!std::isfinite(row[k])) throw Error(Errc::kNonFinite, "feature dump value");
    }
    data.Add(row, label == 1);
  }
  data.features.conservativeResize(data.feature_dim, static_cast<Eigen::Index>(data.size()));
  return data;
}

void SaveFeatures(const QStackDataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot open " + path + " for writing");
  WriteFeatures(data, os);
}

QStackDataset LoadFeatures(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot open " + path);
  return ReadFeatures(is);
}

}  // namespace sesscomp
