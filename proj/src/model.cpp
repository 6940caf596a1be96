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

#include "gwavenet/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "gwavenet/tensor_io.hpp"

namespace gwavenet::model {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kTrainable: return "trainable";
    case Variant::kNonTrainable: return "non-trainable";
    case Variant::kKapt: return "kapt";
    case Variant::kNckl: return "nckl";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view s) {
  if (s == "trainable") return Variant::kTrainable;
  if (s == "non-trainable" || s == "non_trainable") return Variant::kNonTrainable;
  if (s == "kapt") return Variant::kKapt;
  if (s == "nckl") return Variant::kNckl;
  throw ValueError("unknown train config '" + std::string(s) + "' (trainable|non-trainable|kapt|nckl)");
}

std::string_view to_string(FirstKernel k) {
  switch (k) {
    case FirstKernel::kCheckerboard: return "checkerboard";
    case FirstKernel::kGaborBank: return "gabor_bank";
    case FirstKernel::kSobel: return "sobel";
    case FirstKernel::kLaplacian: return "laplacian";
    case FirstKernel::kRandom: return "random";
  }
  return "unknown";
}

FirstKernel first_kernel_from_string(std::string_view s) {
  for (FirstKernel k : {FirstKernel::kCheckerboard, FirstKernel::kGaborBank, FirstKernel::kSobel,
                        FirstKernel::kLaplacian, FirstKernel::kRandom}) {
    if (to_string(k) == s) return k;
  }
  throw ValueError("unknown kernel kind '" + std::string(s) +
                   "' (checkerboard|gabor_bank|sobel|laplacian|random)");
}

std::size_t final_spatial(std::size_t input_size) {
  std::size_t s = input_size;
  for (std::size_t i = 0; i < kPoolLayers; ++i) s /= 2;
  return s;
}

void NetworkConfig::validate() const {
  if (kernel_size != 3 && kernel_size != 5 && kernel_size != 7 && kernel_size != 9) {
    throw ValueError("kernel size must be one of 3, 5, 7, 9; got " + std::to_string(kernel_size));
  }
  if (first_layer_filters == 0) throw ValueError("first layer needs at least one filter");
  if (conv_filters.size() != kConvLayers - 1) {
    throw ValueError("conv_filters must list " + std::to_string(kConvLayers - 1) + " counts (conv2..conv6), got " +
                     std::to_string(conv_filters.size()));
  }
  if (std::any_of(conv_filters.begin(), conv_filters.end(), [](std::size_t f) { return f == 0; })) {
    throw ValueError("conv filter counts must be >= 1");
  }
  if (dense_hidden == 0) throw ValueError("dense_hidden must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValueError("dropout rate must lie in [0, 1)");
  if (lambda_reg < 0.0) throw ValueError("lambda_reg must be >= 0");
  if (final_spatial(input_size) == 0) {
    throw ValueError("input size " + std::to_string(input_size) + " does not survive six 2x2 pools (need >= 64)");
  }
  if (variant == Variant::kNckl && kernel_kind != FirstKernel::kRandom) {
    throw ValueError("nckl has no custom kernel: kernel kind must be random");
  }
  if (variant != Variant::kNckl && kernel_kind == FirstKernel::kRandom) {
    throw ValueError(std::string(to_string(variant)) + " needs a custom kernel, not random");
  }
  if (kernel_kind == FirstKernel::kSobel && kernel_size != 3) throw ValueError("sobel kernels are 3x3");
  if (!(gabor_lambda > 0.0) || !(log_sigma > 0.0)) throw ValueError("gabor lambda and LoG sigma must be > 0");
}

MatrixD custom_kernel(const NetworkConfig& config, std::size_t filter_index) {
  switch (config.kernel_kind) {
    case FirstKernel::kCheckerboard:
      return filters::checkerboard(config.kernel_size);
    case FirstKernel::kGaborBank: {
      const double deg = filters::kGaborOrientationsDeg[filter_index % filters::kGaborOrientationsDeg.size()];
      filters::KernelSpec spec;
      spec.kind = filters::KernelKind::kGabor;
      spec.size = config.kernel_size;
      spec.gabor = filters::GaborParams::with_defaults(config.gabor_lambda, deg * std::numbers::pi / 180.0);
      return filters::gabor(spec);
    }
    case FirstKernel::kSobel: {
      filters::SobelPair pair = filters::sobel();
      return filter_index % 2 == 0 ? pair.gx : pair.gy;
    }
    case FirstKernel::kLaplacian:
      return filters::laplacian_log(config.kernel_size, config.log_sigma);
    case FirstKernel::kRandom:
      break;
  }
  throw ValueError("random first layers have no custom kernel");
}

namespace {

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
UniformInit glorot(std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return UniformInit{-limit, limit};
}

}  // namespace

Network build(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Network net;
  net.config = config;
  net.seed = seed;

  const std::size_t w = config.kernel_size;
  const std::size_t f1 = config.first_layer_filters;
  const bool injected = config.variant == Variant::kTrainable || config.variant == Variant::kNonTrainable;
  Tensor w1(Shape{f1, 1, w, w});
  if (injected) {
    for (std::size_t f = 0; f < f1; ++f) {
      const MatrixD k = custom_kernel(config, f);
      for (std::size_t y = 0; y < w; ++y) {
        for (std::size_t x = 0; x < w; ++x) w1.at(f, 0, y, x) = static_cast<float>(k(y, x));
      }
    }
  } else {
    w1 = random_fill(rng, Shape{f1, 1, w, w}, ScaledNormalInit{w * w});
  }
  const bool conv1_trainable = config.variant != Variant::kNonTrainable;

  auto add_conv_block = [&](nn::Layer conv) {
    net.layers.push_back(std::move(conv));
    net.layers.push_back(nn::make_simple<float>(nn::LayerKind::kRelu));
    net.layers.push_back(nn::make_simple<float>(nn::LayerKind::kMaxPool));
  };

  add_conv_block(nn::make_conv(std::move(w1), Tensor(Shape{f1, 1, 1, 1}), conv1_trainable));
  std::size_t channels = f1;
  for (std::size_t i = 0; i < config.conv_filters.size(); ++i) {
    const std::size_t f = config.conv_filters[i];
    Tensor weight = random_fill(rng, Shape{f, channels, 3, 3}, glorot(channels * 9, f * 9));
    const double l2 = i == 0 ? config.lambda_reg : 0.0;
    add_conv_block(nn::make_conv(std::move(weight), Tensor(Shape{f, 1, 1, 1}), true, l2));
    channels = f;
  }

  const std::size_t side = final_spatial(config.input_size);
  const std::size_t flat = channels * side * side;
  net.layers.push_back(nn::make_simple<float>(nn::LayerKind::kFlatten));
  net.layers.push_back(nn::make_dense(random_fill(rng, Shape{flat, config.dense_hidden, 1, 1}, glorot(flat, config.dense_hidden)),
                                      Tensor(Shape{config.dense_hidden, 1, 1, 1})));
  net.layers.push_back(nn::make_simple<float>(nn::LayerKind::kRelu));
  net.layers.push_back(nn::make_dropout<float>(config.dropout_rate));
  net.layers.push_back(
      nn::make_dense(random_fill(rng, Shape{config.dense_hidden, 1, 1, 1}, glorot(config.dense_hidden, 1)),
                     Tensor(Shape{1, 1, 1, 1})));
  net.layers.push_back(nn::make_simple<float>(nn::LayerKind::kSigmoid));
  return net;
}

std::size_t parameter_count(const Network& net) {
  std::size_t total = 0;
  for (const auto& layer : net.layers) total += layer.param_count();
  return total;
}

std::size_t counted_layers(const Network& net) {
  return static_cast<std::size_t>(std::count_if(net.layers.begin(), net.layers.end(), [](const nn::Layer& l) {
    return l.kind == nn::LayerKind::kConv || l.kind == nn::LayerKind::kMaxPool || l.kind == nn::LayerKind::kDense ||
           l.kind == nn::LayerKind::kDropout;
  }));
}

std::vector<float> predict(const Network& net, const Tensor& batch) {
  const Shape& s = batch.shape();
  const std::size_t side = net.config.input_size;
  if (s.c != 1 || s.h != side || s.w != side) {
    throw ShapeError("predict expects [n, 1, " + std::to_string(side) + ", " + std::to_string(side) + "], got " +
                     s.str());
  }
  constexpr std::size_t kChunk = 32;
  std::vector<float> probs;
  probs.reserve(s.n);
  for (std::size_t first = 0; first < s.n; first += kChunk) {
    Tensor x = batch.slice_batch(first, std::min(kChunk, s.n - first));
    for (const auto& layer : net.layers) x = nn::infer(layer, std::move(x));
    probs.insert(probs.end(), x.values().begin(), x.values().end());
  }
  return probs;
}

Label classify(double p, double threshold) { return p >= threshold ? Label::kGw : Label::kNgw; }

std::vector<MatrixD> extract_first_kernel(const Network& net) {
  const auto it = std::find_if(net.layers.begin(), net.layers.end(),
                               [](const nn::Layer& l) { return l.kind == nn::LayerKind::kConv; });
  if (it == net.layers.end()) throw ValueError("network has no convolution layer");
  const Shape& s = it->weight.shape();
  std::vector<MatrixD> kernels;
  for (std::size_t f = 0; f < s.n; ++f) {
    MatrixD k(s.h, s.w);
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) k(y, x) = it->weight.at(f, 0, y, x);
    }
    kernels.push_back(std::move(k));
  }
  return kernels;
}

namespace {

constexpr std::string_view kCheckpointFormat = "gwck1";

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string shape_token(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

class Manifest {
 public:
  explicit Manifest(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  const std::string& get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw FormatError("checkpoint manifest lacks '" + key + "'");
    return it->second;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw FormatError("checkpoint manifest: '" + key + "' is not an integer");
    }
    return out;
  }

  double get_double(const std::string& key) const {
    const std::string& v = get(key);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw FormatError("checkpoint manifest: '" + key + "' is not a number");
    }
    return out;
  }

 private:
  std::map<std::string, std::string> entries_;
};

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw FormatError("checkpoint manifest: bad count list '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  const NetworkConfig& c = net.config;
  os << "format=" << kCheckpointFormat << '\n'
     << "kernel_size=" << c.kernel_size << '\n'
     << "train_config=" << to_string(c.variant) << '\n'
     << "kernel_kind=" << to_string(c.kernel_kind) << '\n'
     << "first_layer_filters=" << c.first_layer_filters << '\n'
     << "conv_filters=" << join_sizes(c.conv_filters) << '\n'
     << "dense_hidden=" << c.dense_hidden << '\n'
     << "dropout_rate=" << format_double(c.dropout_rate) << '\n'
     << "lambda_reg=" << format_double(c.lambda_reg) << '\n'
     << "input_size=" << c.input_size << '\n'
     << "gabor_lambda=" << format_double(c.gabor_lambda) << '\n'
     << "log_sigma=" << format_double(c.log_sigma) << '\n'
     << "seed=" << net.seed << '\n'
     << "steps=" << net.steps << '\n'
     << "layers=" << net.layers.size() << '\n';
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const nn::Layer& l = net.layers[i];
    os << "layer." << i << ".kind=" << nn::to_string(l.kind) << '\n';
    if (l.has_params()) {
      os << "layer." << i << ".weight=" << shape_token(l.weight.shape()) << '\n'
         << "layer." << i << ".bias=" << shape_token(l.bias.shape()) << '\n'
         << "layer." << i << ".trainable=" << (l.trainable ? 1 : 0) << '\n';
    }
  }
  os << '\n';
  for (const nn::Layer& l : net.layers) {
    if (!l.has_params()) continue;
    write_tensor(os, l.weight);
    write_tensor(os, l.bias);
  }
  if (!os) throw FormatError("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());

  std::map<std::string, std::string> entries;
  std::string line;
  bool terminated = false;
  while (std::getline(is, line)) {
    if (line.empty()) {
      terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint manifest line without '=': " + line);
    entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!terminated) throw FormatError("checkpoint manifest is not terminated by a blank line (truncated file?)");
  const Manifest m(std::move(entries));
  if (m.get("format") != kCheckpointFormat) throw FormatError("unsupported checkpoint format " + m.get("format"));

  NetworkConfig config;
  try {
    config.kernel_size = m.get_u64("kernel_size");
    config.variant = variant_from_string(m.get("train_config"));
    config.kernel_kind = first_kernel_from_string(m.get("kernel_kind"));
    config.first_layer_filters = m.get_u64("first_layer_filters");
    config.conv_filters = parse_sizes(m.get("conv_filters"));
    config.dense_hidden = m.get_u64("dense_hidden");
    config.dropout_rate = m.get_double("dropout_rate");
    config.lambda_reg = m.get_double("lambda_reg");
    config.input_size = m.get_u64("input_size");
    config.gabor_lambda = m.get_double("gabor_lambda");
    config.log_sigma = m.get_double("log_sigma");
    config.validate();
  } catch (const ValueError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  Network net = build(config, m.get_u64("seed"));
  net.steps = m.get_u64("steps");
  if (m.get_u64("layers") != net.layers.size()) {
    throw FormatError("checkpoint lists " + m.get("layers") + " layers, configuration implies " +
                      std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    nn::Layer& layer = net.layers[i];
    const std::string prefix = "layer." + std::to_string(i);
    const std::string where = prefix + " (" + std::string(nn::to_string(layer.kind)) + ")";
    if (m.get(prefix + ".kind") != nn::to_string(layer.kind)) {
      throw FormatError("checkpoint " + where + ": manifest says kind '" + m.get(prefix + ".kind") + "'");
    }
    if (!layer.has_params()) continue;
    if (m.get(prefix + ".trainable") != (layer.trainable ? "1" : "0")) {
      throw FormatError("checkpoint " + where + ": trainable flag disagrees with the configuration");
    }
    auto read_param = [&](Tensor& target, const char* what) {
      Tensor blob;
      try {
        blob = read_tensor(is);
      } catch (const FormatError& e) {
        throw FormatError("checkpoint " + where + " " + what + ": " + e.what());
      }
      if (!(blob.shape() == target.shape())) {
        throw FormatError("checkpoint " + where + " " + what + ": shape " + blob.shape().str() + " != expected " +
                          target.shape().str());
      }
      target = std::move(blob);
    };
    read_param(layer.weight, "weight");
    read_param(layer.bias, "bias");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint has trailing bytes");
  return net;
}

}  // namespace gwavenet::model
