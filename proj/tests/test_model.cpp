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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwavenet/error.hpp"
#include "gwavenet/filters.hpp"
#include "gwavenet/model.hpp"
#include "oracles.hpp"

using namespace gwavenet;
using namespace gwavenet::model;
using nn::LayerKind;

namespace {

namespace fs = std::filesystem;

NetworkConfig small_config(Variant variant, FirstKernel kind = FirstKernel::kCheckerboard) {
  NetworkConfig c;
  c.variant = variant;
  c.kernel_kind = variant == Variant::kNckl ? FirstKernel::kRandom : kind;
  c.conv_filters = {4, 4, 4, 4, 4};
  c.dense_hidden = 8;
  return c;
}

Tensor random_batch(std::uint64_t seed, std::size_t n, std::size_t side = 200) {
  Rng rng(seed);
  return random_fill(rng, Shape{n, 1, side, side}, UniformInit{0.0, 1.0});
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("gwavenet_test_model_" + name); }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("layer stack follows conv-relu-pool x6, flatten, dense, relu, dropout, dense, sigmoid") {
  const Network net = build(NetworkConfig{}, 1);
  std::vector<LayerKind> want;
  for (int i = 0; i < 6; ++i) {
    want.push_back(LayerKind::kConv);
    want.push_back(LayerKind::kRelu);
    want.push_back(LayerKind::kMaxPool);
  }
  for (LayerKind k : {LayerKind::kFlatten, LayerKind::kDense, LayerKind::kRelu, LayerKind::kDropout,
                      LayerKind::kDense, LayerKind::kSigmoid})
    want.push_back(k);
  REQUIRE(net.layers.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(net.layers[i].kind == want[i]);
  CHECK(counted_layers(net) == 15);
  CHECK(counted_layers(net) == kConvLayers + kPoolLayers + kDenseLayers + kDropoutLayers);
}

TEST_CASE("spatial trace 200 -> 3 and the L2 coefficient sits on conv2") {
  CHECK(final_spatial(200) == 3);
  CHECK(final_spatial(64) == 1);
  const Network net = build(NetworkConfig{}, 1);
  std::size_t side = 200;
  std::vector<std::size_t> trace;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::kMaxPool) {
      side /= 2;
      trace.push_back(side);
    }
  }
  CHECK(trace == std::vector<std::size_t>{100, 50, 25, 12, 6, 3});
  std::vector<double> l2;
  for (const auto& l : net.layers)
    if (l.kind == LayerKind::kConv) l2.push_back(l.l2);
  CHECK(l2 == std::vector<double>{0.0, 1e-4, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("parameter count of the default network matches the closed form") {
  // conv1 7x7x1 + 1; conv2..6 3x3 kernels over 1,32,32,16,16 input channels;
  // dense 8*3*3 -> 64 and 64 -> 1.
  const std::size_t expected = (49 + 1) + (32 * 9 * 1 + 32) + (32 * 9 * 32 + 32) + (16 * 9 * 32 + 16) +
                               (16 * 9 * 16 + 16) + (8 * 9 * 16 + 8) + (72 * 64 + 64) + (64 + 1);
  CHECK(expected == 22459);
  CHECK(parameter_count(build(NetworkConfig{}, 1)) == expected);
}

TEST_CASE("kernel injection per variant") {
  NetworkConfig c;
  c.variant = Variant::kTrainable;
  Network t = build(c, 3);
  CHECK(t.layers[0].trainable);
  const auto k = extract_first_kernel(t);
  REQUIRE(k.size() == 1);
  CHECK(k[0] == filters::checkerboard(7));

  c.variant = Variant::kNonTrainable;
  const Network nt = build(c, 3);
  CHECK_FALSE(nt.layers[0].trainable);
  CHECK(extract_first_kernel(nt)[0] == filters::checkerboard(7));
  for (std::size_t i = 1; i < nt.layers.size(); ++i)
    if (nt.layers[i].has_params()) CHECK(nt.layers[i].trainable);

  for (Variant v : {Variant::kNckl, Variant::kKapt}) {
    NetworkConfig r;
    r.variant = v;
    r.kernel_kind = v == Variant::kNckl ? FirstKernel::kRandom : FirstKernel::kCheckerboard;
    const Network net = build(r, 3);
    CHECK(net.layers[0].trainable);
    for (float w : net.layers[0].weight.values()) CHECK((w != 0.0f && w != 1.0f));
  }
}

TEST_CASE("kapt and nckl networks differ only in configuration metadata") {
  NetworkConfig a = small_config(Variant::kKapt);
  NetworkConfig b = small_config(Variant::kNckl);
  const Network ka = build(a, 17);
  const Network nb = build(b, 17);
  REQUIRE(ka.layers.size() == nb.layers.size());
  for (std::size_t i = 0; i < ka.layers.size(); ++i) {
    CHECK(ka.layers[i].kind == nb.layers[i].kind);
    CHECK(bit_equal(ka.layers[i].weight, nb.layers[i].weight));
    CHECK(ka.layers[i].trainable == nb.layers[i].trainable);
  }
}

TEST_CASE("stacked and bank first layers") {
  NetworkConfig c;
  c.first_layer_filters = 16;
  const Network stacked = build(c, 1);
  const auto ks = extract_first_kernel(stacked);
  REQUIRE(ks.size() == 16);
  for (const auto& k : ks) CHECK(k == filters::checkerboard(7));

  c.first_layer_filters = 5;
  c.kernel_kind = FirstKernel::kGaborBank;
  const auto gb = extract_first_kernel(build(c, 1));
  for (std::size_t i = 0; i < 5; ++i) {
    const MatrixD want = custom_kernel(c, i);
    for (std::size_t j = 0; j < want.size(); ++j)
      CHECK(gb[i].values()[j] == static_cast<double>(static_cast<float>(want.values()[j])));
  }
  CHECK_FALSE(gb[0] == gb[1]);

  c.first_layer_filters = 2;
  c.kernel_kind = FirstKernel::kSobel;
  c.kernel_size = 3;
  const auto sb = extract_first_kernel(build(c, 1));
  CHECK(sb[0] == filters::sobel().gx);
  CHECK(sb[1] == filters::sobel().gy);
}

TEST_CASE("configuration validation") {
  auto invalid = [](auto&& mutate) {
    NetworkConfig c;
    mutate(c);
    CHECK_THROWS_AS(build(c, 1), ValueError);
  };
  invalid([](NetworkConfig& c) { c.kernel_size = 4; });
  invalid([](NetworkConfig& c) { c.kernel_size = 11; });
  invalid([](NetworkConfig& c) { c.first_layer_filters = 0; });
  invalid([](NetworkConfig& c) { c.conv_filters = {8, 8, 8, 8}; });
  invalid([](NetworkConfig& c) { c.conv_filters = {8, 8, 0, 8, 8}; });
  invalid([](NetworkConfig& c) { c.dense_hidden = 0; });
  invalid([](NetworkConfig& c) { c.dropout_rate = 1.0; });
  invalid([](NetworkConfig& c) { c.input_size = 32; });
  invalid([](NetworkConfig& c) { c.variant = Variant::kNckl; });
  invalid([](NetworkConfig& c) { c.kernel_kind = FirstKernel::kRandom; });
  invalid([](NetworkConfig& c) { c.kernel_kind = FirstKernel::kSobel; });
  CHECK(variant_from_string("non_trainable") == Variant::kNonTrainable);
  CHECK(variant_from_string("non-trainable") == Variant::kNonTrainable);
  CHECK_THROWS_AS(variant_from_string("frozen"), ValueError);
  CHECK(first_kernel_from_string("gabor_bank") == FirstKernel::kGaborBank);
}

TEST_CASE("predict: stability, purity and determinism") {
  const Network net = build(NetworkConfig{}, 5);
  const auto zero = predict(net, Tensor(Shape{1, 1, 200, 200}));
  REQUIRE(zero.size() == 1);
  CHECK(std::isfinite(zero[0]));
  CHECK(zero[0] > 0.0f);
  CHECK(zero[0] < 1.0f);

  Tensor batch = random_batch(8, 3);
  std::copy(batch.plane(0, 0), batch.plane(0, 0) + 200 * 200, batch.plane(2, 0));
  const auto p1 = predict(net, batch);
  const auto p2 = predict(net, batch);
  CHECK(p1 == p2);
  CHECK(p1[0] == p1[2]);

  CHECK_THROWS_AS(predict(net, Tensor(Shape{1, 1, 100, 100})), ShapeError);
  CHECK_THROWS_AS(predict(net, Tensor(Shape{1, 2, 200, 200})), ShapeError);
}

TEST_CASE("predict is invariant to batch order") {
  const Network net = build(small_config(Variant::kTrainable), 6);
  const Tensor batch = random_batch(9, 5);
  const auto p = predict(net, batch);
  const std::size_t order[] = {3, 0, 4, 1, 2};
  Tensor permuted(batch.shape());
  for (std::size_t i = 0; i < 5; ++i)
    std::copy(batch.plane(order[i], 0), batch.plane(order[i], 0) + 200 * 200, permuted.plane(i, 0));
  const auto q = predict(net, permuted);
  for (std::size_t i = 0; i < 5; ++i) CHECK(q[i] == p[order[i]]);
}

TEST_CASE("predict chunks do not change results") {
  const Network net = build(small_config(Variant::kNckl), 7);
  const Tensor batch = random_batch(10, 40);
  const auto all = predict(net, batch);
  for (std::size_t i : {0u, 31u, 32u, 39u}) {
    const auto one = predict(net, batch.slice_batch(i, 1));
    CHECK(one[0] == all[i]);
  }
}

TEST_CASE("classify threshold rule") {
  CHECK(classify(0.5) == Label::kGw);
  CHECK(classify(0.49) == Label::kNgw);
  CHECK(classify(0.65, 0.7) == Label::kNgw);
  CHECK(classify(1.0) == Label::kGw);
  CHECK(classify(0.0) == Label::kNgw);
}

TEST_CASE("checkpoint round trip is bit-exact for every variant") {
  const Tensor batch = random_batch(11, 8);
  for (Variant v : {Variant::kTrainable, Variant::kNonTrainable, Variant::kKapt, Variant::kNckl}) {
    CAPTURE(to_string(v));
    Network net = build(small_config(v), 21);
    // Perturb every parameter so the test does not pass on initial values alone.
    Rng rng(4);
    for (auto& l : net.layers) {
      if (!l.has_params()) continue;
      for (float& w : l.weight.values()) w += static_cast<float>(rng.uniform(-0.01, 0.01));
      for (float& b : l.bias.values()) b = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    net.steps = 123;
    const fs::path path = temp_path(std::string(to_string(v)) + ".gwck");
    save_checkpoint(net, path);
    const Network back = load_checkpoint(path);
    CHECK(back.steps == 123);
    CHECK(back.seed == 21);
    CHECK(back.config.variant == v);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      CHECK(back.layers[i].kind == net.layers[i].kind);
      if (!net.layers[i].has_params()) continue;
      CHECK(bit_equal(back.layers[i].weight, net.layers[i].weight));
      CHECK(bit_equal(back.layers[i].bias, net.layers[i].bias));
      CHECK(back.layers[i].trainable == net.layers[i].trainable);
    }
    CHECK(predict(back, batch) == predict(net, batch));
    fs::remove(path);
  }
}

TEST_CASE("checkpoint manifest records the configuration") {
  NetworkConfig c;
  c.variant = Variant::kTrainable;
  c.kernel_size = 7;
  const fs::path path = temp_path("manifest.gwck");
  save_checkpoint(build(c, 2), path);
  const std::string text = slurp(path);
  const std::string manifest = text.substr(0, text.find("\n\n"));
  CHECK(manifest.find("train_config=trainable\n") != std::string::npos);
  CHECK(manifest.find("kernel_size=7\n") != std::string::npos);
  CHECK(manifest.find("layer.0.kind=conv\n") != std::string::npos);
  CHECK(manifest.find("layer.0.weight=1x1x7x7\n") != std::string::npos);
  fs::remove(path);
}

TEST_CASE("corrupt checkpoints raise structured errors") {
  const fs::path path = temp_path("corrupt.gwck");
  save_checkpoint(build(small_config(Variant::kTrainable), 2), path);
  const std::string good = slurp(path);
  auto write = [&](const std::string& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << bytes;
  };
  auto error_of = [&]() -> std::string {
    try {
      load_checkpoint(path);
    } catch (const FormatError& e) {
      return e.what();
    }
    return "";
  };

  write(good.substr(0, good.size() - 10));
  CHECK(error_of().find("layer.") != std::string::npos);

  write(good.substr(0, good.find("\n\n")));
  CHECK(error_of().find("not terminated") != std::string::npos);

  write(good + "x");
  CHECK(error_of().find("trailing") != std::string::npos);

  std::string bad_kind = good;
  bad_kind.replace(bad_kind.find("layer.1.kind=relu"), 17, "layer.1.kind=conv");
  write(bad_kind);
  CHECK(error_of().find("layer.1") != std::string::npos);

  std::string bad_format = good;
  bad_format.replace(0, bad_format.find('\n'), "format=other");
  write(bad_format);
  CHECK(error_of().find("format") != std::string::npos);

  // Blob shape that disagrees with the manifest: swap conv_filters.
  std::string bad_shape = good;
  bad_shape.replace(bad_shape.find("conv_filters=4,4,4,4,4"), 22, "conv_filters=4,4,4,4,5");
  write(bad_shape);
  const std::string msg = error_of();
  CHECK(msg.find("layer.") != std::string::npos);

  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}
