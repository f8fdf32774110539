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

#include <cmath>
#include <random>
#include <string>

#include "sesscomp/error.h"

namespace sesscomp {

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double GeluDerivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) * (0.5 * M_2_SQRTPI * M_SQRT1_2);
  return cdf + x * pdf;
}

double LeakyRelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double LeakyReluDerivative(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

void Validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1 || spec.hidden_dim < 1) {
    throw Error(Errc::kInvalidArgument, "network dimensions must be >= 1");
  }
  if (spec.num_blocks < 0) {
    throw Error(Errc::kInvalidArgument, "num_blocks must be >= 0");
  }
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
    throw Error(Errc::kInvalidArgument, "dropout_rate must lie in [0, 1)");
  }
  if (spec.activation != Activation::kGelu && spec.activation != Activation::kLeakyRelu) {
    throw Error(Errc::kInvalidArgument, "unknown activation");
  }
}

namespace {

Dense MakeDense(int in, int out, std::mt19937_64* rng) {
  Dense d;
  d.weight = Eigen::MatrixXd::Zero(out, in);
  d.bias = Eigen::VectorXd::Zero(out);
  if (rng != nullptr) {
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Eigen::Index j = 0; j < d.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < d.weight.rows(); ++i) d.weight(i, j) = uniform(*rng);
    }
  }
  return d;
}

LayerNorm MakeNorm(int n, bool unit_gain) {
  return LayerNorm{unit_gain ? Eigen::VectorXd::Ones(n) : Eigen::VectorXd::Zero(n),
                   Eigen::VectorXd::Zero(n)};
}

NetworkParams Build(const NetworkSpec& spec, std::mt19937_64* rng) {
  Validate(spec);
  const int h = spec.hidden_dim;
  const bool unit_gain = rng != nullptr;
  NetworkParams p;
  p.input = MakeDense(spec.input_dim, h, rng);
  if (spec.prenorm_residual) {
    for (int b = 0; b < spec.num_blocks; ++b) {
      ResidualBlock block;
      block.norm = MakeNorm(h, unit_gain);
      block.fc1 = MakeDense(h, h, rng);
      block.fc2 = MakeDense(h, h, rng);
      p.blocks.push_back(std::move(block));
    }
    p.final_norm = MakeNorm(h, unit_gain);
  } else {
    for (int b = 0; b < spec.num_blocks; ++b) p.hidden.push_back(MakeDense(h, h, rng));
  }
  p.output = MakeDense(h, spec.output_dim, rng);
  return p;
}

template <typename P, typename Span>
std::vector<Span> CollectTensors(P& p) {
  std::vector<Span> out;
  auto add = [&out](auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); };
  auto add_dense = [&](auto& d) { add(d.weight); add(d.bias); };
  auto add_norm = [&](auto& n) { add(n.gain); add(n.bias); };
  add_dense(p.input);
  for (auto& b : p.blocks) {
    add_norm(b.norm);
    add_dense(b.fc1);
    add_dense(b.fc2);
  }
  for (auto& d : p.hidden) add_dense(d);
  if (p.final_norm.gain.size() > 0) add_norm(p.final_norm);
  add_dense(p.output);
  return out;
}

Eigen::MatrixXd Activate(const Eigen::MatrixXd& z, const NetworkSpec& spec) {
  if (spec.activation == Activation::kGelu) {
    return z.unaryExpr([](double x) { return Gelu(x); });
  }
  const double slope = spec.leaky_slope;
  return z.unaryExpr([slope](double x) { return LeakyRelu(x, slope); });
}

Eigen::MatrixXd ActivationDerivative(const Eigen::MatrixXd& z, const NetworkSpec& spec) {
  if (spec.activation == Activation::kGelu) {
    return z.unaryExpr([](double x) { return GeluDerivative(x); });
  }
  const double slope = spec.leaky_slope;
  return z.unaryExpr([slope](double x) { return LeakyReluDerivative(x, slope); });
}

Eigen::MatrixXd Affine(const Dense& d, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::MatrixXd y = d.weight * x;
  y.colwise() += d.bias;
  return y;
}

Eigen::MatrixXd ApplyNorm(const LayerNorm& n, const ForwardCache::NormState& s) {
  Eigen::MatrixXd y = s.normalized.array().colwise() * n.gain.array();
  y.colwise() += n.bias;
  return y;
}

// Backprop through y = gain * xhat + bias given dL/dy; accumulates the gain and
// bias gradients and returns dL/dx.
Eigen::MatrixXd NormBackward(const LayerNorm& n, const ForwardCache::NormState& s,
                             const Eigen::MatrixXd& grad_y, LayerNorm& grads) {
  grads.gain = (grad_y.array() * s.normalized.array()).rowwise().sum();
  grads.bias = grad_y.rowwise().sum();
  const Eigen::ArrayXXd dxhat = grad_y.array().colwise() * n.gain.array();
  const double count = static_cast<double>(grad_y.rows());
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum().matrix();
  const Eigen::RowVectorXd sum_dxhat_xhat =
      (dxhat * s.normalized.array()).colwise().sum().matrix();
  Eigen::MatrixXd dx = count * dxhat.matrix();
  dx.rowwise() -= sum_dxhat;
  dx -= (s.normalized.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  dx = (dx.array().rowwise() * (s.inv_std.array() / count)).matrix();
  return dx;
}

void DenseBackward(const Dense& d, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& grad_y, Dense& grads,
                   Eigen::MatrixXd* grad_input) {
  grads.weight = grad_y * input.transpose();
  grads.bias = grad_y.rowwise().sum();
  if (grad_input != nullptr) *grad_input = d.weight.transpose() * grad_y;
}

Eigen::MatrixXd DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                            std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  std::bernoulli_distribution bern(keep);
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = bern(rng) ? 1.0 / keep : 0.0;
  }
  return mask;
}

}  // namespace

NetworkParams InitParams(const NetworkSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Build(spec, &rng);
}

NetworkParams ZeroParams(const NetworkSpec& spec) { return Build(spec, nullptr); }

std::vector<std::span<double>> Tensors(NetworkParams& params) {
  return CollectTensors<NetworkParams, std::span<double>>(params);
}

std::vector<std::span<const double>> Tensors(const NetworkParams& params) {
  return CollectTensors<const NetworkParams, std::span<const double>>(params);
}

std::size_t ParameterCount(const NetworkParams& params) {
  std::size_t n = 0;
  for (auto t : Tensors(params)) n += t.size();
  return n;
}

bool AllFinite(const NetworkParams& params) {
  for (auto t : Tensors(params)) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ForwardCache::NormState NormalizeColumns(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  ForwardCache::NormState s;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  s.normalized = x;
  s.normalized.rowwise() -= mean;
  const Eigen::RowVectorXd var =
      s.normalized.array().square().colwise().mean().matrix();
  s.inv_std = (var.array() + kLayerNormEpsilon).rsqrt().matrix();
  s.normalized = (s.normalized.array().rowwise() * s.inv_std.array()).matrix();
  return s;
}

Eigen::MatrixXd Forward(const NetworkParams& params, const NetworkSpec& spec,
                        const Eigen::Ref<const Eigen::MatrixXd>& input,
                        ForwardMode mode, ForwardCache* cache) {
  if (input.rows() != spec.input_dim) {
    throw Error(Errc::kDimensionMismatch,
                "network input has " + std::to_string(input.rows()) +
                    " rows, expected " + std::to_string(spec.input_dim));
  }
  if (!input.allFinite()) throw Error(Errc::kNonFinite, "network input");
  if (params.input.weight.cols() != spec.input_dim ||
      params.output.weight.rows() != spec.output_dim) {
    throw Error(Errc::kDimensionMismatch, "parameters do not match the network spec");
  }

  const bool dropout = mode.train && spec.dropout_rate > 0.0;
  std::mt19937_64 rng(mode.seed);
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c = ForwardCache{};
  c.spec = spec;
  c.input = input;

  auto activate_and_drop = [&](ForwardCache::Stage& st) {
    Eigen::MatrixXd a = Activate(st.pre_activation, spec);
    if (dropout) {
      st.mask = DropoutMask(a.rows(), a.cols(), spec.dropout_rate, rng);
      st.post_dropout = a.cwiseProduct(st.mask);
    } else {
      st.post_dropout = std::move(a);
    }
  };

  Eigen::MatrixXd h;
  if (spec.prenorm_residual) {
    h = Affine(params.input, input);
    for (const auto& block : params.blocks) {
      ForwardCache::Stage st;
      st.block_input = h;
      st.norm = NormalizeColumns(h);
      st.norm_out = ApplyNorm(block.norm, st.norm);
      st.pre_activation = Affine(block.fc1, st.norm_out);
      activate_and_drop(st);
      h += Affine(block.fc2, st.post_dropout);
      c.stages.push_back(std::move(st));
    }
    c.final_norm = NormalizeColumns(h);
    c.final_in = ApplyNorm(params.final_norm, c.final_norm);
  } else {
    h = input;
    for (int j = 0; j <= spec.num_blocks; ++j) {
      const Dense& layer = j == 0 ? params.input : params.hidden.at(j - 1);
      ForwardCache::Stage st;
      st.block_input = h;
      st.pre_activation = Affine(layer, h);
      activate_and_drop(st);
      h = st.post_dropout;
      c.stages.push_back(std::move(st));
    }
    c.final_in = std::move(h);
  }
  c.valid = true;
  return Affine(params.output, c.final_in);
}

Eigen::VectorXd ForwardOne(const NetworkParams& params, const NetworkSpec& spec,
                           const Eigen::VectorXd& input, ForwardMode mode) {
  Eigen::MatrixXd out = Forward(params, spec, Eigen::MatrixXd(input), mode, nullptr);
  return out.col(0);
}

NetworkParams Backward(const NetworkParams& params, const NetworkSpec& spec,
                       const ForwardCache& cache,
                       const Eigen::Ref<const Eigen::MatrixXd>& grad_output,
                       Eigen::MatrixXd* grad_input) {
  if (!cache.valid || !(cache.spec == spec)) {
    throw Error(Errc::kStaleCache, "forward cache does not belong to this network");
  }
  if (grad_output.rows() != spec.output_dim ||
      grad_output.cols() != cache.final_in.cols()) {
    throw Error(Errc::kStaleCache, "output gradient shape does not match forward batch");
  }
  const std::size_t expected_stages =
      spec.prenorm_residual ? params.blocks.size() : params.hidden.size() + 1;
  if (cache.stages.size() != expected_stages) {
    throw Error(Errc::kStaleCache, "forward cache stage count mismatch");
  }

  NetworkParams grads = ZeroParams(spec);
  Eigen::MatrixXd g;
  DenseBackward(params.output, cache.final_in, grad_output, grads.output, &g);

  auto through_activation = [&](const ForwardCache::Stage& st, Eigen::MatrixXd grad_post) {
    if (st.mask.size() > 0) grad_post = grad_post.cwiseProduct(st.mask);
    return Eigen::MatrixXd(grad_post.cwiseProduct(ActivationDerivative(st.pre_activation, spec)));
  };

  if (spec.prenorm_residual) {
    g = NormBackward(params.final_norm, cache.final_norm, g, grads.final_norm);
    for (std::size_t b = params.blocks.size(); b-- > 0;) {
      const auto& block = params.blocks[b];
      const auto& st = cache.stages[b];
      auto& gb = grads.blocks[b];
      Eigen::MatrixXd g_post;
      DenseBackward(block.fc2, st.post_dropout, g, gb.fc2, &g_post);
      const Eigen::MatrixXd g_pre = through_activation(st, std::move(g_post));
      Eigen::MatrixXd g_norm_out;
      DenseBackward(block.fc1, st.norm_out, g_pre, gb.fc1, &g_norm_out);
      g += NormBackward(block.norm, st.norm, g_norm_out, gb.norm);
    }
    DenseBackward(params.input, cache.input, g, grads.input, grad_input);
  } else {
    for (std::size_t j = cache.stages.size(); j-- > 0;) {
      const auto& st = cache.stages[j];
      const Dense& layer = j == 0 ? params.input : params.hidden[j - 1];
      Dense& gl = j == 0 ? grads.input : grads.hidden[j - 1];
      const Eigen::MatrixXd g_pre = through_activation(st, std::move(g));
      Eigen::MatrixXd g_in;
      DenseBackward(layer, st.block_input, g_pre, gl,
                    (j > 0 || grad_input != nullptr) ? &g_in : nullptr);
      g = std::move(g_in);
    }
    if (grad_input != nullptr) *grad_input = std::move(g);
  }
  return grads;
}

}  // namespace sesscomp
