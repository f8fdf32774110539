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

#ifndef SESSCOMP_QSTACK_H_
#define SESSCOMP_QSTACK_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sesscomp/checkpoint.h"
#include "sesscomp/embedding.h"
#include "sesscomp/eval.h"
#include "sesscomp/mlp.h"
#include "sesscomp/session_net.h"

namespace sesscomp {

inline constexpr int kQStackWindows = 10;
inline constexpr int kQStackBlock = kQStackWindows * kQStackWindows;
inline constexpr int kQStackFeaturesPerModel = 2 * kQStackBlock;

// One embedding extractor's view of the trial population: its corpus and the
// session network trained on it.
struct ModelView {
  const EmbeddingCorpus* corpus = nullptr;
  const SessionModel* session = nullptr;
};

// Builds similarity stacks. Per model the layout is 100 speaker-window cosines
// followed by 100 session-window cosines, each row-major with the enrol window
// as the row. Models are concatenated in order.
class FeatureBuilder {
 public:
  explicit FeatureBuilder(std::vector<ModelView> views);

  int num_models() const { return static_cast<int>(views_.size()); }
  int feature_dim() const { return kQStackFeaturesPerModel * num_models(); }

  Eigen::VectorXd Build(const std::string& enrol_id, const std::string& test_id) const;

 private:
  struct Cached {
    const EmbeddingCorpus* corpus;
    std::vector<Eigen::MatrixXd> speaker;  // unit-norm windows per record
    std::vector<Eigen::MatrixXd> session;  // unit-norm session embeddings per window
  };
  std::vector<ModelView> views_;
  std::vector<Cached> cache_;
};

struct QStackDataset {
  int feature_dim = 0;
  Eigen::MatrixXd features;  // feature_dim x N
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  // Throws kDimensionMismatch if the row length differs from earlier rows.
  void Add(const Eigen::VectorXd& row, bool target);
  void Reserve(std::size_t n);
};

QStackDataset BuildDataset(const FeatureBuilder& builder, const Protocol& protocol);

struct QStackConfig {
  int hidden_dim = 400;
  double dropout = 0.1;
  double leaky_slope = 0.01;
  int steps = 2000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Re-draw each training row under a random enrol-window permutation, a
  // random test-window permutation and a random enrol/test swap, applied
  // identically to every block of the row.
  bool permute_windows = false;
};

void Validate(const QStackConfig& config);

// Applies the permutations described above to one feature row.
Eigen::VectorXd PermuteWindows(const Eigen::VectorXd& features,
                               const std::array<int, kQStackWindows>& enrol_order,
                               const std::array<int, kQStackWindows>& test_order,
                               bool swap_sides);

// input -> 400 -> 400 -> 2, leaky ReLU, dropout after each hidden layer.
NetworkSpec QStackSpec(int feature_dim, const QStackConfig& config);

struct QStackModel {
  NetworkSpec spec;
  NetworkParams params;
  int num_models = 1;
};

// Mean softmax cross-entropy of 2 x N logits; row 1 is "same speaker".
// Writes dLoss/dLogits when `grad` is non-null.
double CrossEntropy(const Eigen::Ref<const Eigen::MatrixXd>& logits,
                    std::span<const std::uint8_t> labels, Eigen::MatrixXd* grad = nullptr);

// Throws kDegenerate for a single-class dataset. Appends one batch loss per
// step to `loss_curve` when non-null.
QStackModel TrainQStack(const QStackDataset& dev, const QStackConfig& config,
                        int num_models = 1, std::vector<double>* loss_curve = nullptr);

// logit(same) - logit(different), eval mode.
double QStackScore(const QStackModel& model, const Eigen::VectorXd& features);
std::vector<double> QStackScores(const QStackModel& model, const QStackDataset& data);
// Softmax posterior of the "same" class.
double QStackPosterior(const QStackModel& model, const Eigen::VectorXd& features);

Checkpoint ToCheckpoint(const QStackModel& model);
QStackModel FromCheckpoint(const Checkpoint& checkpoint);

// Feature dump: "SESSQF01" | u32 feature length | u64 count | per row
// u8 label then feature_length f64.
inline constexpr char kFeatureMagic[] = "SESSQF01";

void WriteFeatures(const QStackDataset& data, std::ostream& os);
QStackDataset ReadFeatures(std::istream& is);
void SaveFeatures(const QStackDataset& data, const std::string& path);
QStackDataset LoadFeatures(const std::string& path);

}  // namespace sesscomp

#endif  // SESSCOMP_QSTACK_H_
