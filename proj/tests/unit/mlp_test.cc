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

#include "sesscomp/mlp.h"

#include <random>

#include "gradient_check.h"
#include "gtest_util.h"

namespace sesscomp {
namespace {

using testing::Flatten;
using testing::NumericGradient;
using testing::RelativeError;

Eigen::MatrixXd RandomMatrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  return m;
}

// Perturbs every parameter away from its initial value so biases and gains are
// exercised by the gradient check.
void Jitter(NetworkParams& params, std::mt19937_64& rng, double scale = 0.1) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto t : Tensors(params))
    for (double& v : t) v += normal(rng);
}

TEST(ActivationTest, ClosedForms) {
  EXPECT_EQ(Gelu(0.0), 0.0);
  EXPECT_DOUBLE_EQ(GeluDerivative(0.0), 0.5);
  // 3 * Phi(3) evaluated with mpmath at 30 digits: 2.99595030590510971642.
  EXPECT_NEAR(Gelu(3.0), 2.9959503059051097, 1e-14);
  EXPECT_NEAR(Gelu(3.0), 2.9960, 5e-5);
  EXPECT_DOUBLE_EQ(LeakyRelu(-1.0, 0.01), -0.01);
  EXPECT_DOUBLE_EQ(LeakyRelu(2.5, 0.01), 2.5);
  EXPECT_DOUBLE_EQ(LeakyReluDerivative(-3.0, 0.2), 0.2);
  EXPECT_DOUBLE_EQ(LeakyReluDerivative(0.0, 0.2), 1.0);
}

TEST(ActivationTest, GeluDerivativeMatchesFiniteDifference) {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const double fd = (Gelu(x + 1e-6) - Gelu(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(GeluDerivative(x), fd, 1e-8) << x;
  }
}

TEST(NetworkTest, ZeroWeightsGiveZeroOutput) {
  for (bool residual : {true, false}) {
    NetworkSpec spec{5, 3, 7, 2, Activation::kGelu, 0.01, 0.0, residual};
    const Eigen::VectorXd out =
        ForwardOne(ZeroParams(spec), spec, Eigen::VectorXd::LinSpaced(5, -1, 1));
    EXPECT_EQ(out, Eigen::VectorXd::Zero(3)) << residual;
  }
}

TEST(NetworkTest, NoDropoutMeansTrainEqualsEval) {
  std::mt19937_64 rng(3);
  for (bool residual : {true, false}) {
    NetworkSpec spec{6, 4, 8, 2, Activation::kLeakyRelu, 0.01, 0.0, residual};
    const NetworkParams p = InitParams(spec, 17);
    const Eigen::MatrixXd x = RandomMatrix(6, 5, rng);
    EXPECT_EQ(Forward(p, spec, x, ForwardMode::Train(99)), Forward(p, spec, x, ForwardMode::Eval()));
  }
}

TEST(NetworkTest, EvalIsPure) {
  std::mt19937_64 rng(4);
  NetworkSpec spec{6, 4, 8, 3, Activation::kGelu, 0.01, 0.4, true};
  const NetworkParams p = InitParams(spec, 1);
  const Eigen::MatrixXd x = RandomMatrix(6, 9, rng);
  const Eigen::MatrixXd first = Forward(p, spec, x, ForwardMode::Eval());
  for (int k = 0; k < 5; ++k) EXPECT_EQ(Forward(p, spec, x, ForwardMode::Eval()), first);
  // Train mode is reproducible per seed and differs across seeds.
  EXPECT_EQ(Forward(p, spec, x, ForwardMode::Train(8)), Forward(p, spec, x, ForwardMode::Train(8)));
  EXPECT_NE(Forward(p, spec, x, ForwardMode::Train(8)), Forward(p, spec, x, ForwardMode::Train(9)));
}

TEST(NetworkTest, LinearChainRule) {
  // Plain layout with slope-1 leaky ReLU is linear: y = w_out * (w_in * x).
  NetworkSpec spec{1, 1, 1, 0, Activation::kLeakyRelu, 1.0, 0.0, false};
  NetworkParams p = ZeroParams(spec);
  p.input.weight(0, 0) = 0.7;
  p.output.weight(0, 0) = 1.0;
  ForwardCache cache;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 2.5);
  const Eigen::MatrixXd y = Forward(p, spec, x, ForwardMode::Eval(), &cache);
  EXPECT_DOUBLE_EQ(y(0, 0), 1.75);
  const Eigen::MatrixXd gy = Eigen::MatrixXd::Constant(1, 1, -1.5);
  const NetworkParams g = Backward(p, spec, cache, gy);
  EXPECT_DOUBLE_EQ(g.input.weight(0, 0), 2.5 * -1.5);
  EXPECT_DOUBLE_EQ(g.input.bias(0), -1.5);
  EXPECT_DOUBLE_EQ(g.output.weight(0, 0), 1.75 * -1.5);
}

// Loss = sum(probe .* f(x)), so dLoss/dOutput = probe.
double CheckNetwork(const NetworkSpec& spec, std::mt19937_64& rng, int batch, bool train) {
  NetworkParams p = InitParams(spec, rng());
  Jitter(p, rng);
  const Eigen::MatrixXd x = RandomMatrix(spec.input_dim, batch, rng);
  const Eigen::MatrixXd probe = RandomMatrix(spec.output_dim, batch, rng);
  const ForwardMode mode = train ? ForwardMode::Train(rng()) : ForwardMode::Eval();
  ForwardCache cache;
  Forward(p, spec, x, mode, &cache);
  Eigen::MatrixXd grad_x;
  const std::vector<double> analytic = Flatten(Backward(p, spec, cache, probe, &grad_x));
  auto loss = [&] { return (probe.array() * Forward(p, spec, x, mode).array()).sum(); };
  double err = RelativeError(analytic, NumericGradient(p, loss));

  // Input gradient.
  std::vector<double> gx_fd, gx;
  Eigen::MatrixXd xx = x;
  for (Eigen::Index i = 0; i < xx.size(); ++i) {
    const double saved = xx.data()[i];
    xx.data()[i] = saved + 1e-5;
    const double up = (probe.array() * Forward(p, spec, xx, mode).array()).sum();
    xx.data()[i] = saved - 1e-5;
    const double down = (probe.array() * Forward(p, spec, xx, mode).array()).sum();
    xx.data()[i] = saved;
    gx_fd.push_back((up - down) / 2e-5);
    gx.push_back(grad_x.data()[i]);
  }
  return std::max(err, RelativeError(gx, gx_fd));
}

TEST(NetworkTest, PrenormBlockMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  NetworkSpec spec{8, 5, 12, 1, Activation::kGelu, 0.01, 0.0, true};
  EXPECT_LT(CheckNetwork(spec, rng, 4, false), 1e-5);
}

TEST(NetworkTest, RandomFamilyMatchesFiniteDifferences) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> dim(2, 32);
  // Two-wide LayerNorm has a zero Jacobian (see below), so widths start at 3.
  std::uniform_int_distribution<int> width(3, 32);
  std::uniform_int_distribution<int> blocks(0, 3);
  for (int draw = 0; draw < 100; ++draw) {
    NetworkSpec spec;
    spec.input_dim = dim(rng);
    spec.output_dim = dim(rng);
    spec.hidden_dim = width(rng);
    spec.num_blocks = blocks(rng);
    spec.activation = draw % 2 == 0 ? Activation::kGelu : Activation::kLeakyRelu;
    spec.prenorm_residual = (draw / 2) % 2 == 0;
    spec.dropout_rate = draw % 3 == 0 ? 0.25 : 0.0;
    const double err = CheckNetwork(spec, rng, 3, /*train=*/spec.dropout_rate > 0.0);
    EXPECT_LT(err, 1e-5) << "draw " << draw << " in " << spec.input_dim << " hidden "
                         << spec.hidden_dim << " blocks " << spec.num_blocks;
  }
}

TEST(NetworkTest, TwoWideLayerNormIsConstant) {
  // Normalizing two values always yields (+1, -1) or (-1, +1), so no
  // gradient flows through it.
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = RandomMatrix(2, 50, rng);
  const auto s = NormalizeColumns(x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = 0.25 * (x(0, j) - x(1, j)) * (x(0, j) - x(1, j));
    const double magnitude = std::sqrt(var / (var + kLayerNormEpsilon));
    EXPECT_NEAR(s.normalized(0, j), -s.normalized(1, j), 1e-12);
    EXPECT_NEAR(std::abs(s.normalized(0, j)), magnitude, 1e-12);
  }
}

TEST(NetworkTest, InvertedDropoutPreservesExpectation) {
  std::mt19937_64 rng(77);
  for (double rate : {0.1, 0.2}) {
    // Identity output layer exposes the dropout output directly.
    NetworkSpec spec{4, 16, 16, 0, Activation::kLeakyRelu, 1.0, rate, false};
    NetworkParams p = InitParams(spec, 5);
    p.output.weight.setIdentity();
    const Eigen::MatrixXd x = RandomMatrix(4, 1, rng);
    const Eigen::VectorXd expected = Forward(p, spec, x, ForwardMode::Eval()).col(0);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(16);
    constexpr int kMasks = 10000;
    for (int k = 0; k < kMasks; ++k) mean += Forward(p, spec, x, ForwardMode::Train(k)).col(0);
    mean /= kMasks;
    for (Eigen::Index i = 0; i < 16; ++i) {
      if (std::abs(expected[i]) < 1e-3) continue;
      EXPECT_NEAR(mean[i] / expected[i], 1.0, 0.02) << "rate " << rate << " unit " << i;
    }
  }
}

TEST(NetworkTest, LayerNormStandardizes) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = 3.0 * RandomMatrix(24, 10, rng).array() + 5.0;
  const auto s = NormalizeColumns(x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = s.normalized.col(j);
    EXPECT_NEAR(col.mean(), 0.0, 1e-9);
    EXPECT_NEAR(col.array().square().mean(), 1.0, 1e-9);
  }
}

TEST(NetworkTest, ShapeAndCacheErrors) {
  NetworkSpec spec{3, 2, 4, 1, Activation::kGelu, 0.01, 0.0, true};
  const NetworkParams p = InitParams(spec, 0);
  EXPECT_ERRC(Forward(p, spec, Eigen::MatrixXd::Zero(4, 1), ForwardMode::Eval()),
              Errc::kDimensionMismatch);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 1);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_ERRC(Forward(p, spec, bad, ForwardMode::Eval()), Errc::kNonFinite);

  ForwardCache empty;
  EXPECT_ERRC(Backward(p, spec, empty, Eigen::MatrixXd::Zero(2, 1)), Errc::kStaleCache);
  ForwardCache cache;
  Forward(p, spec, Eigen::MatrixXd::Ones(3, 2), ForwardMode::Eval(), &cache);
  EXPECT_ERRC(Backward(p, spec, cache, Eigen::MatrixXd::Zero(2, 3)), Errc::kStaleCache);
  NetworkSpec other = spec;
  other.hidden_dim = 5;
  EXPECT_ERRC(Backward(InitParams(other, 0), other, cache, Eigen::MatrixXd::Zero(2, 2)),
              Errc::kStaleCache);

  NetworkSpec invalid = spec;
  invalid.dropout_rate = 1.0;
  EXPECT_ERRC(Validate(invalid), Errc::kInvalidArgument);
  invalid = spec;
  invalid.hidden_dim = 0;
  EXPECT_ERRC(InitParams(invalid, 0), Errc::kInvalidArgument);
}

TEST(NetworkTest, GlorotInitBoundsAndZeroBias) {
  NetworkSpec spec{10, 6, 20, 2, Activation::kGelu, 0.01, 0.0, true};
  const NetworkParams p = InitParams(spec, 3);
  EXPECT_LE(p.input.weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 30.0));
  EXPECT_LE(p.blocks[1].fc2.weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 40.0));
  EXPECT_EQ(p.output.bias, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(p.blocks[0].norm.gain, Eigen::VectorXd::Ones(20));
  EXPECT_EQ(ParameterCount(p), 10u * 20 + 20 + 2 * (40 + 2 * (400 + 20)) + 40 + 20 * 6 + 6);
}

}  // namespace
}  // namespace sesscomp
