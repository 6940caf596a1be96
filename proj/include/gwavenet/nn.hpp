/* Copyright 2026 The gWaveNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gwavenet/rng.hpp"
#include "gwavenet/tensor.hpp"

namespace gwavenet::nn {

enum class LayerKind { kConv, kRelu, kMaxPool, kFlatten, kDense, kDropout, kSigmoid };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

enum class Mode { kTrain, kEval };

/// One layer as a plain value. Conv weights are [filters, channels, k, k];
/// dense weights are [inputs, outputs, 1, 1]. Biases are [count, 1, 1, 1].
/// `l2` is the penalty coefficient on the weights (zero when disabled).
template <typename T>
struct BasicLayer {
  LayerKind kind = LayerKind::kRelu;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  bool trainable = true;
  double dropout_rate = 0.0;
  double l2 = 0.0;

  bool has_params() const { return kind == LayerKind::kConv || kind == LayerKind::kDense; }
  std::size_t param_count() const { return has_params() ? weight.size() + bias.size() : 0; }
};

using Layer = BasicLayer<float>;

template <typename T>
BasicLayer<T> make_conv(BasicTensor<T> weight, BasicTensor<T> bias, bool trainable = true, double l2 = 0.0);
template <typename T>
BasicLayer<T> make_dense(BasicTensor<T> weight, BasicTensor<T> bias, bool trainable = true);
template <typename T>
BasicLayer<T> make_simple(LayerKind kind);
template <typename T>
BasicLayer<T> make_dropout(double rate);

/// What backward needs from the forward pass.
template <typename T>
struct ForwardCache {
  LayerKind kind = LayerKind::kRelu;
  bool valid = false;
  Shape input_shape;
  BasicTensor<T> saved;                // conv/dense: input; relu/sigmoid: output
  std::vector<std::uint32_t> argmax;   // maxpool
  std::vector<T> mask;                 // dropout: 0 or 1/(1-p) per element
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> y;
  ForwardCache<T> cache;
};

template <typename T>
struct ParamGrads {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
struct BackwardResult {
  std::optional<BasicTensor<T>> dx;
  std::optional<ParamGrads<T>> grads;
};

/// conv: same-padded conv2d; relu: max(0, x); maxpool: maxpool2; flatten:
/// [n, c*h*w, 1, 1]; dense: x W + b; dropout: inverted dropout in train mode,
/// identity in eval mode; sigmoid: 1 / (1 + exp(-x)).
template <typename T>
ForwardResult<T> forward(const BasicLayer<T>& layer, BasicTensor<T> x, Mode mode, Rng& rng);

/// Forward pass in eval mode without keeping a cache.
template <typename T>
BasicTensor<T> infer(const BasicLayer<T>& layer, BasicTensor<T> x);

/// Exact gradients. `need_dx = false` skips the input gradient (first layer).
template <typename T>
BackwardResult<T> backward(const BasicLayer<T>& layer, const ForwardCache<T>& cache, const BasicTensor<T>& dy,
                           bool need_dx = true);

/// Probabilities are clamped into [kBceEpsilon, 1 - kBceEpsilon] before the log.
inline constexpr double kBceEpsilon = 1e-7;

template <typename T>
struct LossResult {
  double loss = 0.0;
  std::vector<T> grad;
};

/// loss = -mean(y ln p + (1 - y) ln(1 - p)), grad = (p - y) / (p (1 - p) n) on
/// the clamped p. Labels must be exactly 0 or 1.
template <typename T>
LossResult<T> bce_loss(std::span<const T> p, std::span<const T> y);

/// Gradient of mean BCE with respect to the sigmoid's input: (p - y) / n.
/// Numerically safe where p has saturated to 0 or 1.
template <typename T>
std::vector<T> bce_logit_grad(std::span<const T> p, std::span<const T> y);

template <typename T>
struct PenaltyResult {
  double loss = 0.0;
  BasicTensor<T> grad;
};

/// lambda * sum(w^2) and its gradient 2 lambda w.
template <typename T>
PenaltyResult<T> l2_penalty(const BasicTensor<T>& weights, double lambda);

/// Per-layer gradients, aligned with the layer list. Layers without params
/// (or frozen ones) may carry std::nullopt.
template <typename T>
using GradientList = std::vector<std::optional<ParamGrads<T>>>;

/// w <- w - lr g for every trainable parameter. Frozen layers are skipped
/// entirely, whatever gradient is supplied for them.
template <typename T>
void sgd_step(std::vector<BasicLayer<T>>& layers, const GradientList<T>& grads, double lr);

/// SGD with optional classical momentum: v <- mu v + g; w <- w - lr v.
/// With mu = 0 this is exactly sgd_step.
class Sgd {
 public:
  Sgd(double lr, double momentum = 0.0);

  void step(std::vector<Layer>& layers, const GradientList<float>& grads);

  double lr() const { return lr_; }
  double momentum() const { return momentum_; }

 private:
  double lr_;
  double momentum_;
  std::vector<std::optional<ParamGrads<float>>> velocity_;
};

}  // namespace gwavenet::nn
