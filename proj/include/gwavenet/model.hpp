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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gwavenet/filters.hpp"
#include "gwavenet/label.hpp"
#include "gwavenet/nn.hpp"

namespace gwavenet::model {

/// How the first convolution relates to the custom kernel.
///   trainable     kernel injected into conv1, conv1 learns
///   non-trainable kernel injected into conv1, conv1 frozen
///   kapt          kernel applied to the images beforehand; conv1 random, learns
///   nckl          no custom kernel; conv1 random, learns
enum class Variant { kTrainable, kNonTrainable, kKapt, kNckl };

std::string_view to_string(Variant v);
/// Accepts "non-trainable" and "non_trainable".
Variant variant_from_string(std::string_view s);

enum class FirstKernel { kCheckerboard, kGaborBank, kSobel, kLaplacian, kRandom };

std::string_view to_string(FirstKernel k);
FirstKernel first_kernel_from_string(std::string_view s);

struct NetworkConfig {
  std::size_t kernel_size = 7;
  Variant variant = Variant::kTrainable;
  FirstKernel kernel_kind = FirstKernel::kCheckerboard;
  std::size_t first_layer_filters = 1;
  /// Filter counts of conv2..conv6.
  std::vector<std::size_t> conv_filters = {32, 32, 16, 16, 8};
  std::size_t dense_hidden = 64;
  double dropout_rate = 0.5;
  /// L2 coefficient on conv2's weights.
  double lambda_reg = 1e-4;
  /// Side of the square single-channel input.
  std::size_t input_size = 200;
  double gabor_lambda = filters::kDefaultGaborLambda;
  double log_sigma = filters::kDefaultLogSigma;

  /// Throws ValueError on inconsistent settings (e.g. nckl with a custom
  /// kernel, kapt without one, sobel at a size other than 3).
  void validate() const;
};

inline constexpr std::size_t kConvLayers = 6;
inline constexpr std::size_t kPoolLayers = 6;
inline constexpr std::size_t kDenseLayers = 2;
inline constexpr std::size_t kDropoutLayers = 1;

struct Network {
  NetworkConfig config;
  std::uint64_t seed = 0;
  /// Optimizer steps taken so far.
  std::uint64_t steps = 0;
  /// conv, relu, maxpool (x6), flatten, dense, relu, dropout, dense, sigmoid.
  std::vector<nn::Layer> layers;
};

/// Assembles the network. conv1 holds the configured custom kernel (every
/// filter: checkerboard replicas, the five Gabor orientations in turn, Sobel
/// gx/gy in turn, or LoG) for trainable/non-trainable, and He-normal weights
/// for kapt/nckl. conv2..conv6 and both dense layers use Glorot-uniform
/// weights; every bias starts at zero. conv2 carries
/// the L2 coefficient.
Network build(const NetworkConfig& config, std::uint64_t seed);

/// Kernel injected into (or, for kapt, applied before) the first layer; the
/// i-th first-layer filter for banks.
MatrixD custom_kernel(const NetworkConfig& config, std::size_t filter_index = 0);

/// Spatial side after the six 2x2 pools (floor semantics).
std::size_t final_spatial(std::size_t input_size);

std::size_t parameter_count(const Network& net);

/// Number of layers in the conv + pool + dense + dropout accounting (15).
std::size_t counted_layers(const Network& net);

/// Eval-mode probabilities for a [n, 1, S, S] batch.
std::vector<float> predict(const Network& net, const Tensor& batch);

/// gw iff p >= threshold.
Label classify(double p, double threshold = 0.5);

/// conv1 weights, one w x w matrix per filter.
std::vector<MatrixD> extract_first_kernel(const Network& net);

/// `.gwck` checkpoint: UTF-8 manifest of key=value lines ended by a blank
/// line, then each parameterized layer's weight and bias as raw tensor blobs,
/// in layer order.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
/// Throws FormatError naming the offending layer; never returns a partial
/// network.
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace gwavenet::model
