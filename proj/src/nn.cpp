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

#include "gwavenet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gwavenet::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kRelu, LayerKind::kMaxPool, LayerKind::kFlatten,
                      LayerKind::kDense, LayerKind::kDropout, LayerKind::kSigmoid}) {
    if (to_string(k) == name) return k;
  }
  throw ValueError("unknown layer kind '" + std::string(name) + "'");
}

namespace {

template <typename T>
void require_bias(const BasicTensor<T>& bias, std::size_t count, const char* what) {
  if (bias.size() != count) {
    throw ShapeError(std::string(what) + ": bias has " + std::to_string(bias.size()) + " entries, expected " +
                     std::to_string(count));
  }
}

template <typename T>
T sigmoid(T x) {
  // Branches keep exp() from overflowing for large |x|. The result is held
  // strictly inside (0, 1) in the storage type.
  const double v = static_cast<double>(x);
  double s = 0.0;
  if (v >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-v));
  } else {
    const double e = std::exp(v);
    s = e / (1.0 + e);
  }
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  return std::clamp(static_cast<T>(s), lo, hi);
}

template <typename T>
BasicMatrix<T> dense_weight_matrix(const BasicLayer<T>& layer) {
  return BasicMatrix<T>(layer.weight.shape().n, layer.weight.shape().c,
                        std::vector<T>(layer.weight.values().begin(), layer.weight.values().end()));
}

template <typename T>
BasicMatrix<T> as_rows(const BasicTensor<T>& x, std::size_t features, const char* what) {
  const Shape& s = x.shape();
  if (s.c * s.h * s.w != features) {
    throw ShapeError(std::string(what) + ": input " + s.str() + " has " + std::to_string(s.c * s.h * s.w) +
                     " features, layer expects " + std::to_string(features));
  }
  return to_matrix(x);
}

template <typename T>
BasicTensor<T> dense_forward(const BasicLayer<T>& layer, const BasicTensor<T>& x) {
  const std::size_t in = layer.weight.shape().n;
  const std::size_t out = layer.weight.shape().c;
  require_bias(layer.bias, out, "dense");
  BasicMatrix<T> y = matmul(as_rows(x, in, "dense"), dense_weight_matrix(layer));
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < out; ++c) y(r, c) = static_cast<T>(static_cast<double>(y(r, c)) + layer.bias[c]);
  }
  BasicTensor<T> result = to_tensor(y);
  result.check_finite("dense output");
  return result;
}

template <typename T>
BasicTensor<T> simple_forward(const BasicLayer<T>& layer, BasicTensor<T>& x) {
  switch (layer.kind) {
    case LayerKind::kRelu:
      for (T& v : x.values()) v = v > T(0) ? v : T(0);
      return std::move(x);
    case LayerKind::kSigmoid:
      for (T& v : x.values()) v = sigmoid(v);
      return std::move(x);
    case LayerKind::kFlatten: {
      const Shape& s = x.shape();
      return x.reshaped(Shape{s.n, s.c * s.h * s.w, 1, 1});
    }
    default:
      throw ValueError("simple_forward called for a parameterized layer");
  }
}

}  // namespace

template <typename T>
BasicLayer<T> make_conv(BasicTensor<T> weight, BasicTensor<T> bias, bool trainable, double l2) {
  require_bias(bias, weight.shape().n, "conv");
  if (l2 < 0.0) throw ValueError("L2 coefficient must be >= 0");
  BasicLayer<T> layer;
  layer.kind = LayerKind::kConv;
  layer.weight = std::move(weight);
  layer.bias = std::move(bias);
  layer.trainable = trainable;
  layer.l2 = l2;
  return layer;
}

template <typename T>
BasicLayer<T> make_dense(BasicTensor<T> weight, BasicTensor<T> bias, bool trainable) {
  if (weight.shape().h != 1 || weight.shape().w != 1) {
    throw ShapeError("dense weight must be [inputs, outputs, 1, 1], got " + weight.shape().str());
  }
  require_bias(bias, weight.shape().c, "dense");
  BasicLayer<T> layer;
  layer.kind = LayerKind::kDense;
  layer.weight = std::move(weight);
  layer.bias = std::move(bias);
  layer.trainable = trainable;
  return layer;
}

template <typename T>
BasicLayer<T> make_simple(LayerKind kind) {
  if (kind == LayerKind::kConv || kind == LayerKind::kDense || kind == LayerKind::kDropout) {
    throw ValueError("make_simple: layer kind '" + std::string(to_string(kind)) + "' needs parameters");
  }
  BasicLayer<T> layer;
  layer.kind = kind;
  layer.trainable = false;
  return layer;
}

template <typename T>
BasicLayer<T> make_dropout(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValueError("dropout rate must lie in [0, 1)");
  BasicLayer<T> layer;
  layer.kind = LayerKind::kDropout;
  layer.dropout_rate = rate;
  layer.trainable = false;
  return layer;
}

template <typename T>
BasicTensor<T> infer(const BasicLayer<T>& layer, BasicTensor<T> x) {
  switch (layer.kind) {
    case LayerKind::kConv:
      return conv2d(x, layer.weight, layer.bias.values(), Padding::kSame);
    case LayerKind::kMaxPool:
      return maxpool2(x).output;
    case LayerKind::kDense:
      return dense_forward(layer, x);
    case LayerKind::kDropout:
      return x;
    default:
      return simple_forward(layer, x);
  }
}

template <typename T>
ForwardResult<T> forward(const BasicLayer<T>& layer, BasicTensor<T> x, Mode mode, Rng& rng) {
  ForwardResult<T> result;
  ForwardCache<T>& cache = result.cache;
  cache.kind = layer.kind;
  cache.valid = true;
  cache.input_shape = x.shape();
  switch (layer.kind) {
    case LayerKind::kConv:
      result.y = conv2d(x, layer.weight, layer.bias.values(), Padding::kSame);
      cache.saved = std::move(x);
      break;
    case LayerKind::kDense:
      result.y = dense_forward(layer, x);
      cache.saved = std::move(x);
      break;
    case LayerKind::kMaxPool: {
      PoolResult<T> pooled = maxpool2(x);
      result.y = std::move(pooled.output);
      cache.argmax = std::move(pooled.argmax);
      break;
    }
    case LayerKind::kDropout: {
      if (mode == Mode::kEval || layer.dropout_rate == 0.0) {
        cache.mask.assign(x.size(), T(1));
        result.y = std::move(x);
        break;
      }
      const double p = layer.dropout_rate;
      const T scale = static_cast<T>(1.0 / (1.0 - p));
      cache.mask.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        cache.mask[i] = rng.uniform() < p ? T(0) : scale;
        x[i] *= cache.mask[i];
      }
      result.y = std::move(x);
      break;
    }
    case LayerKind::kRelu:
    case LayerKind::kSigmoid:
      result.y = simple_forward(layer, x);
      cache.saved = result.y;
      break;
    case LayerKind::kFlatten:
      result.y = simple_forward(layer, x);
      break;
  }
  return result;
}

template <typename T>
BackwardResult<T> backward(const BasicLayer<T>& layer, const ForwardCache<T>& cache, const BasicTensor<T>& dy,
                           bool need_dx) {
  if (!cache.valid) throw ValueError("backward: missing forward cache");
  if (cache.kind != layer.kind) {
    throw ValueError("backward: cache recorded a '" + std::string(to_string(cache.kind)) + "' layer, not '" +
                     std::string(to_string(layer.kind)) + "'");
  }
  BackwardResult<T> result;
  switch (layer.kind) {
    case LayerKind::kConv: {
      ParamGrads<T> g{BasicTensor<T>(layer.weight.shape()), BasicTensor<T>(layer.bias.shape())};
      conv2d_grad_params(cache.saved, dy, Padding::kSame, g.weight, g.bias);
      result.grads = std::move(g);
      if (need_dx) result.dx = conv2d_grad_input(dy, layer.weight, cache.input_shape, Padding::kSame);
      break;
    }
    case LayerKind::kDense: {
      const std::size_t in = layer.weight.shape().n;
      const std::size_t out = layer.weight.shape().c;
      if (dy.shape() != Shape{cache.input_shape.n, out, 1, 1}) {
        throw ShapeError("dense backward: dy " + dy.shape().str() + " does not match the forward output");
      }
      const BasicMatrix<T> x = as_rows(cache.saved, in, "dense backward");
      const BasicMatrix<T> dym = to_matrix(dy);
      const BasicMatrix<T> dw = matmul(x.transposed(), dym);
      BasicTensor<T> db(layer.bias.shape());
      for (std::size_t c = 0; c < out; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < dym.rows(); ++r) s += static_cast<double>(dym(r, c));
        db[c] = static_cast<T>(s);
      }
      result.grads = ParamGrads<T>{to_tensor(dw).reshaped(layer.weight.shape()), std::move(db)};
      if (need_dx) {
        result.dx = to_tensor(matmul(dym, dense_weight_matrix(layer).transposed())).reshaped(cache.input_shape);
      }
      break;
    }
    case LayerKind::kMaxPool:
      if (need_dx) result.dx = maxpool2_backward(dy, cache.argmax, cache.input_shape);
      break;
    case LayerKind::kFlatten:
      if (need_dx) result.dx = dy.reshaped(cache.input_shape);
      break;
    case LayerKind::kRelu: {
      if (!(dy.shape() == cache.saved.shape())) throw ShapeError("relu backward: dy shape mismatch");
      BasicTensor<T> dx = dy;
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(cache.saved[i] > T(0))) dx[i] = T(0);
      }
      if (need_dx) result.dx = std::move(dx);
      break;
    }
    case LayerKind::kSigmoid: {
      if (!(dy.shape() == cache.saved.shape())) throw ShapeError("sigmoid backward: dy shape mismatch");
      BasicTensor<T> dx = dy;
      for (std::size_t i = 0; i < dx.size(); ++i) {
        const T s = cache.saved[i];
        dx[i] = dy[i] * s * (T(1) - s);
      }
      if (need_dx) result.dx = std::move(dx);
      break;
    }
    case LayerKind::kDropout: {
      if (dy.size() != cache.mask.size()) throw ShapeError("dropout backward: dy shape mismatch");
      BasicTensor<T> dx = dy;
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * cache.mask[i];
      if (need_dx) result.dx = std::move(dx);
      break;
    }
  }
  return result;
}

template <typename T>
LossResult<T> bce_loss(std::span<const T> p, std::span<const T> y) {
  if (p.size() != y.size()) throw ShapeError("bce_loss: predictions and labels differ in length");
  if (p.empty()) throw ShapeError("bce_loss: empty batch");
  LossResult<T> result;
  result.grad.resize(p.size());
  const double n = static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double label = static_cast<double>(y[i]);
    if (label != 0.0 && label != 1.0) throw ValueError("bce_loss: label must be 0 or 1");
    const double q = std::clamp(static_cast<double>(p[i]), kBceEpsilon, 1.0 - kBceEpsilon);
    total += label * std::log(q) + (1.0 - label) * std::log(1.0 - q);
    result.grad[i] = static_cast<T>((q - label) / (q * (1.0 - q) * n));
  }
  result.loss = -total / n;
  return result;
}

template <typename T>
std::vector<T> bce_logit_grad(std::span<const T> p, std::span<const T> y) {
  if (p.size() != y.size()) throw ShapeError("bce_logit_grad: predictions and labels differ in length");
  if (p.empty()) throw ShapeError("bce_logit_grad: empty batch");
  std::vector<T> grad(p.size());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double label = static_cast<double>(y[i]);
    if (label != 0.0 && label != 1.0) throw ValueError("bce_logit_grad: label must be 0 or 1");
    grad[i] = static_cast<T>((static_cast<double>(p[i]) - label) / n);
  }
  return grad;
}

template <typename T>
PenaltyResult<T> l2_penalty(const BasicTensor<T>& weights, double lambda) {
  if (lambda < 0.0) throw ValueError("L2 coefficient must be >= 0");
  PenaltyResult<T> result{0.0, BasicTensor<T>(weights.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = static_cast<double>(weights[i]);
    sum += w * w;
    result.grad[i] = static_cast<T>(2.0 * lambda * w);
  }
  result.loss = lambda * sum;
  return result;
}

namespace {

template <typename T>
void check_grad_alignment(const BasicLayer<T>& layer, const ParamGrads<T>& g, std::size_t index) {
  if (!(g.weight.shape() == layer.weight.shape()) || !(g.bias.shape() == layer.bias.shape())) {
    throw ShapeError("gradient for layer " + std::to_string(index) + " (" + std::string(to_string(layer.kind)) +
                     ") has shape " + g.weight.shape().str() + " but the parameter is " +
                     layer.weight.shape().str());
  }
}

template <typename T>
void apply_update(BasicTensor<T>& param, const BasicTensor<T>& step, double lr) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    param[i] = static_cast<T>(static_cast<double>(param[i]) - lr * static_cast<double>(step[i]));
  }
}

}  // namespace

template <typename T>
void sgd_step(std::vector<BasicLayer<T>>& layers, const GradientList<T>& grads, double lr) {
  if (lr < 0.0) throw ValueError("learning rate must be >= 0");
  if (grads.size() != layers.size()) {
    throw ShapeError("sgd_step: " + std::to_string(grads.size()) + " gradient entries for " +
                     std::to_string(layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    BasicLayer<T>& layer = layers[i];
    if (!layer.has_params() || !layer.trainable || !grads[i]) continue;
    check_grad_alignment(layer, *grads[i], i);
    apply_update(layer.weight, grads[i]->weight, lr);
    apply_update(layer.bias, grads[i]->bias, lr);
  }
}

Sgd::Sgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {
  if (lr < 0.0) throw ValueError("learning rate must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ValueError("momentum must lie in [0, 1)");
}

void Sgd::step(std::vector<Layer>& layers, const GradientList<float>& grads) {
  if (momentum_ == 0.0) {
    sgd_step(layers, grads, lr_);
    return;
  }
  if (grads.size() != layers.size()) throw ShapeError("Sgd::step: gradient list does not match layers");
  velocity_.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& layer = layers[i];
    if (!layer.has_params() || !layer.trainable || !grads[i]) continue;
    check_grad_alignment(layer, *grads[i], i);
    auto& v = velocity_[i];
    if (!v) v = ParamGrads<float>{Tensor(layer.weight.shape()), Tensor(layer.bias.shape())};
    auto blend = [&](Tensor& vel, const Tensor& g) {
      for (std::size_t q = 0; q < vel.size(); ++q) {
        vel[q] = static_cast<float>(momentum_ * vel[q] + static_cast<double>(g[q]));
      }
    };
    blend(v->weight, grads[i]->weight);
    blend(v->bias, grads[i]->bias);
    apply_update(layer.weight, v->weight, lr_);
    apply_update(layer.bias, v->bias, lr_);
  }
}

#define GWAVENET_INSTANTIATE(T)                                                                          \
  template BasicLayer<T> make_conv(BasicTensor<T>, BasicTensor<T>, bool, double);                        \
  template BasicLayer<T> make_dense(BasicTensor<T>, BasicTensor<T>, bool);                               \
  template BasicLayer<T> make_simple<T>(LayerKind);                                                      \
  template BasicLayer<T> make_dropout<T>(double);                                                        \
  template ForwardResult<T> forward(const BasicLayer<T>&, BasicTensor<T>, Mode, Rng&);                   \
  template BasicTensor<T> infer(const BasicLayer<T>&, BasicTensor<T>);                                   \
  template BackwardResult<T> backward(const BasicLayer<T>&, const ForwardCache<T>&, const BasicTensor<T>&, \
                                      bool);                                                             \
  template LossResult<T> bce_loss(std::span<const T>, std::span<const T>);                               \
  template std::vector<T> bce_logit_grad(std::span<const T>, std::span<const T>);                        \
  template PenaltyResult<T> l2_penalty(const BasicTensor<T>&, double);                                   \
  template void sgd_step(std::vector<BasicLayer<T>>&, const GradientList<T>&, double);

GWAVENET_INSTANTIATE(float)
GWAVENET_INSTANTIATE(double)

#undef GWAVENET_INSTANTIATE

}  // namespace gwavenet::nn
