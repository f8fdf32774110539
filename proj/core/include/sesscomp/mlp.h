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

#ifndef SESSCOMP_MLP_H_
#define SESSCOMP_MLP_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sesscomp {

enum class Activation : std::uint8_t { kGelu = 0, kLeakyRelu = 1 };

// Exact GELU, x * Phi(x) with the erf-based Gaussian CDF.
double Gelu(double x);
double GeluDerivative(double x);
double LeakyRelu(double x, double slope);
double LeakyReluDerivative(double x, double slope);

// Two layouts share this spec:
//
//   prenorm_residual = true   (session network)
//     in -> Dense(hidden) -> num_blocks x [x + Dense(drop(act(Dense(LN(x)))))]
//        -> LN -> Dense(output)
//
//   prenorm_residual = false  (plain MLP, e.g. the stacking classifier)
//     in -> drop(act(Dense(hidden))) -> num_blocks x drop(act(Dense(hidden)))
//        -> Dense(output)
struct NetworkSpec {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_dim = 1;
  int num_blocks = 0;
  Activation activation = Activation::kGelu;
  double leaky_slope = 0.01;
  double dropout_rate = 0.0;
  bool prenorm_residual = true;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

void Validate(const NetworkSpec& spec);

struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct LayerNorm {
  Eigen::VectorXd gain;
  Eigen::VectorXd bias;
};

struct ResidualBlock {
  LayerNorm norm;
  Dense fc1;
  Dense fc2;
};

struct NetworkParams {
  Dense input;
  std::vector<ResidualBlock> blocks;  // residual layout only
  std::vector<Dense> hidden;          // plain layout only
  LayerNorm final_norm;               // residual layout only
  Dense output;
};

// Glorot-uniform weights, zero biases, unit norm gains.
NetworkParams InitParams(const NetworkSpec& spec, std::uint64_t seed);
// Same shapes as InitParams, every entry zero.
NetworkParams ZeroParams(const NetworkSpec& spec);

// Flat views of every tensor in declaration order: input, blocks (norm gain,
// norm bias, fc1, fc2), hidden layers, final norm, output; weight before bias.
std::vector<std::span<double>> Tensors(NetworkParams& params);
std::vector<std::span<const double>> Tensors(const NetworkParams& params);
std::size_t ParameterCount(const NetworkParams& params);
bool AllFinite(const NetworkParams& params);

struct ForwardMode {
  bool train = false;
  std::uint64_t seed = 0;

  static ForwardMode Eval() { return {}; }
  static ForwardMode Train(std::uint64_t seed) { return {true, seed}; }
};

// Activations retained by a forward pass for backpropagation.
struct ForwardCache {
  bool valid = false;
  NetworkSpec spec;
  Eigen::MatrixXd input;

  struct NormState {
    Eigen::MatrixXd normalized;  // (x - mean) / std, before gain/bias
    Eigen::RowVectorXd inv_std;
  };
  struct Stage {
    Eigen::MatrixXd block_input;  // residual layout: skip branch
    NormState norm;
    Eigen::MatrixXd norm_out;
    Eigen::MatrixXd pre_activation;
    Eigen::MatrixXd mask;  // empty when dropout is inactive
    Eigen::MatrixXd post_dropout;
  };
  std::vector<Stage> stages;
  NormState final_norm;
  Eigen::MatrixXd final_in;  // input to the output layer
};

// Batched forward: columns of `input` are samples.
Eigen::MatrixXd Forward(const NetworkParams& params, const NetworkSpec& spec,
                        const Eigen::Ref<const Eigen::MatrixXd>& input,
                        ForwardMode mode, ForwardCache* cache = nullptr);

Eigen::VectorXd ForwardOne(const NetworkParams& params, const NetworkSpec& spec,
                           const Eigen::VectorXd& input, ForwardMode mode = {});

// Gradients of sum(grad_output .* output) w.r.t. every parameter, plus the
// input gradient when requested. Throws kStaleCache if `cache` did not come
// from a forward pass under `spec` with a matching batch.
NetworkParams Backward(const NetworkParams& params, const NetworkSpec& spec,
                       const ForwardCache& cache,
                       const Eigen::Ref<const Eigen::MatrixXd>& grad_output,
                       Eigen::MatrixXd* grad_input = nullptr);

// Variance floor inside layer normalization.
inline constexpr double kLayerNormEpsilon = 1e-10;

// Normalizes each column to zero mean and unit variance.
ForwardCache::NormState NormalizeColumns(const Eigen::Ref<const Eigen::MatrixXd>& x);

}  // namespace sesscomp

#endif  // SESSCOMP_MLP_H_
