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
#include <cstring>
#include <sstream>

#include "gwavenet/error.hpp"
#include "gwavenet/filters.hpp"
#include "gwavenet/tensor.hpp"
#include "gwavenet/tensor_io.hpp"
#include "oracles.hpp"

using namespace gwavenet;

namespace {

Tensor checkerboard_weight(std::size_t w) {
  const MatrixD k = filters::checkerboard(w);
  Tensor t(Shape{1, 1, w, w});
  for (std::size_t i = 0; i < k.size(); ++i) t[i] = static_cast<float>(k.values()[i]);
  return t;
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor(Shape{0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 1, 1}, std::vector<float>{NAN}), NumericError);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 1, 1}, INFINITY), NumericError);
  const Tensor t(Shape{2, 3, 4, 5}, 1.5f);
  CHECK(t.size() == 120);
  CHECK(t.reshaped(Shape{1, 1, 1, 120}).size() == 120);
  CHECK_THROWS_AS(t.reshaped(Shape{1, 1, 1, 7}), ShapeError);
}

TEST_CASE("conv2d examples") {
  const Tensor x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor w(Shape{1, 1, 1, 1}, {2});
  const std::vector<float> b = {0};
  const Tensor y = conv2d(x, w, std::span<const float>(b), Padding::kValid);
  CHECK(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y[0] == 2);
  CHECK(y[1] == 4);
  CHECK(y[2] == 6);
  CHECK(y[3] == 8);

  const Tensor ones(Shape{1, 1, 3, 3}, 1.0f);
  const Tensor single = conv2d(ones, checkerboard_weight(3), std::span<const float>(b), Padding::kValid);
  CHECK(single.shape() == Shape{1, 1, 1, 1});
  CHECK(single[0] == 5);
}

TEST_CASE("conv2d does not flip the kernel") {
  // Impulse input: the output is the kernel mirrored through the centre, so
  // the weight at (0, 0) lands at (2, 2).
  Tensor x(Shape{1, 1, 3, 3});
  x.at(0, 0, 1, 1) = 1.0f;
  Tensor w(Shape{1, 1, 3, 3});
  w.at(0, 0, 0, 0) = 7.0f;
  const std::vector<float> b = {0};
  const Tensor y = conv2d(x, w, std::span<const float>(b), Padding::kSame);
  CHECK(y.at(0, 0, 2, 2) == 7.0f);
  CHECK(y.at(0, 0, 0, 0) == 0.0f);
}

TEST_CASE("conv2d errors") {
  const std::vector<float> b = {0};
  CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 1, 4, 4}), Tensor(Shape{1, 1, 2, 2}), std::span<const float>(b),
                         Padding::kSame),
                  ValueError);
  CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 2, 4, 4}), Tensor(Shape{1, 1, 3, 3}), std::span<const float>(b),
                         Padding::kSame),
                  ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 3, 3}), std::span<const float>(b),
                         Padding::kValid),
                  ShapeError);
  const std::vector<float> two = {0, 0};
  CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 1, 4, 4}), Tensor(Shape{1, 1, 3, 3}), std::span<const float>(two),
                         Padding::kSame),
                  ShapeError);
}

TEST_CASE("conv2d matches the nested-loop oracle on random 1x2x8x8 input") {
  Rng rng(101);
  const TensorD x = oracle::random_tensor(rng, Shape{1, 2, 8, 8});
  const TensorD w = oracle::random_tensor(rng, Shape{3, 2, 3, 3});
  const std::vector<double> bias = {0.1, -0.2, 0.3};
  const TensorD ref = oracle::conv_reference(x, w, bias, 1);
  const Tensor y = conv2d(x.cast<float>(), w.cast<float>(), std::span<const float>(std::vector<float>{0.1f, -0.2f, 0.3f}),
                          Padding::kSame);
  REQUIRE(y.shape() == ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-6);
}

TEST_CASE("conv2d matches the nested-loop oracle on 50 random shapes") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    const std::size_t k = 1 + 2 * rng.below(3);
    const std::size_t n = 1 + rng.below(2);
    const std::size_t c = 1 + rng.below(3);
    const std::size_t f = 1 + rng.below(3);
    const std::size_t h = k + rng.below(6);
    const std::size_t w = k + rng.below(6);
    const bool same = rng.below(2) == 0;
    const TensorD x = oracle::random_tensor(rng, Shape{n, c, h, w});
    const TensorD wt = oracle::random_tensor(rng, Shape{f, c, k, k});
    std::vector<double> bias(f);
    for (double& v : bias) v = rng.uniform(-1.0, 1.0);
    const TensorD ref = oracle::conv_reference(x, wt, bias, same ? (k - 1) / 2 : 0);
    const TensorD y = conv2d(x, wt, std::span<const double>(bias), same ? Padding::kSame : Padding::kValid);
    REQUIRE(y.shape() == ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-6);
  }
}

TEST_CASE("conv2d is linear and same mode preserves spatial size") {
  Rng rng(5);
  for (std::size_t k : {1u, 3u, 5u, 7u, 9u}) {
    const TensorD x = oracle::random_tensor(rng, Shape{1, 1, 11, 10});
    const TensorD w = oracle::random_tensor(rng, Shape{2, 1, k, k});
    const auto b = zeros(2);
    const TensorD y = conv2d(x, w, std::span<const double>(b), Padding::kSame);
    CHECK(y.shape() == Shape{1, 2, 11, 10});
    TensorD scaled = x;
    for (double& v : scaled.values()) v *= -2.5;
    const TensorD ys = conv2d(scaled, w, std::span<const double>(b), Padding::kSame);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(ys[i] - (-2.5 * y[i])) <= 1e-6 * std::max(1.0, std::abs(ys[i])));
    }
  }
}

TEST_CASE("conv2d gradients match their nested-loop definitions") {
  // dx[c,y,x] = sum_{f,i,j} w[f,c,i,j] dy[f, y-i+p, x-j+p]; dW via correlation.
  Rng rng(31);
  const TensorD x = oracle::random_tensor(rng, Shape{2, 2, 5, 6});
  const TensorD w = oracle::random_tensor(rng, Shape{3, 2, 3, 3});
  const TensorD dy = oracle::random_tensor(rng, Shape{2, 3, 5, 6});
  const TensorD dx = conv2d_grad_input(dy, w, x.shape(), Padding::kSame);
  TensorD dw(w.shape()), db(Shape{3, 1, 1, 1});
  conv2d_grad_params(x, dy, Padding::kSame, dw, db);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (long y = 0; y < 5; ++y) {
        for (long xx = 0; xx < 6; ++xx) {
          double s = 0.0;
          for (std::size_t f = 0; f < 3; ++f) {
            for (long i = 0; i < 3; ++i) {
              for (long j = 0; j < 3; ++j) {
                const long oy = y - i + 1, ox = xx - j + 1;
                if (oy < 0 || ox < 0 || oy >= 5 || ox >= 6) continue;
                s += w.at(f, c, i, j) * dy.at(n, f, oy, ox);
              }
            }
          }
          CHECK(std::abs(dx.at(n, c, y, xx) - s) <= 1e-9);
        }
      }
    }
  }
  for (std::size_t f = 0; f < 3; ++f) {
    double bs = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t q = 0; q < 30; ++q) bs += dy.at(n, f, q / 6, q % 6);
    CHECK(std::abs(db[f] - bs) <= 1e-9);
  }
}

TEST_CASE("maxpool2 examples") {
  const PoolResult<float> r = maxpool2(Tensor(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(r.output.shape() == Shape{1, 1, 1, 1});
  CHECK(r.output[0] == 4);
  CHECK(r.argmax[0] == 3);  // (1, 1)
  CHECK(maxpool2(Tensor(Shape{1, 1, 5, 5})).output.shape() == Shape{1, 1, 2, 2});
  CHECK_THROWS_AS(maxpool2(Tensor(Shape{1, 1, 1, 4})), ValueError);
}

TEST_CASE("maxpool2 ties go to the smallest flat index") {
  const PoolResult<float> r = maxpool2(Tensor(Shape{1, 1, 2, 2}, 3.0f));
  CHECK(r.argmax[0] == 0);
  const PoolResult<float> r2 = maxpool2(Tensor(Shape{1, 1, 2, 2}, {0, 5, 5, 1}));
  CHECK(r2.argmax[0] == 1);
}

TEST_CASE("maxpool2 winners dominate their windows") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorD x = oracle::random_tensor(rng, Shape{2, 2, 6 + rng.below(3), 6 + rng.below(3)});
    const auto r = maxpool2(x);
    const Shape& s = x.shape();
    const double lo = *std::min_element(x.values().begin(), x.values().end());
    const double hi = *std::max_element(x.values().begin(), x.values().end());
    std::size_t o = 0;
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t c = 0; c < s.c; ++c) {
        for (std::size_t y = 0; y < s.h / 2; ++y) {
          for (std::size_t xx = 0; xx < s.w / 2; ++xx, ++o) {
            const double out = r.output[o];
            CHECK(out == x[r.argmax[o]]);
            CHECK(out <= hi);
            CHECK(out >= lo);
            for (std::size_t dy = 0; dy < 2; ++dy)
              for (std::size_t dx = 0; dx < 2; ++dx) CHECK(out >= x.at(n, c, 2 * y + dy, 2 * xx + dx));
          }
        }
      }
    }
  }
}

TEST_CASE("matmul examples and oracle") {
  const Matrix id = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const Matrix m = {{1, 2}, {3, 4}, {5, 6}};
  CHECK(matmul(id, m) == m);
  const Matrix a = {{1, 2}};
  const Matrix b = {{3}, {4}};
  CHECK(matmul(a, b)(0, 0) == 11);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);

  Rng rng(6);
  MatrixD p(4, 5), q(5, 3);
  for (double& v : p.values()) v = rng.uniform(-1.0, 1.0);
  for (double& v : q.values()) v = rng.uniform(-1.0, 1.0);
  const MatrixD r = matmul(p, q);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += p(i, k) * q(k, j);
      CHECK(std::abs(r(i, j) - s) <= 1e-6);
    }
  }
}

TEST_CASE("random_fill is deterministic and has the stated moments") {
  Rng a(7), b(7);
  CHECK(bit_equal(random_fill(a, Shape{2, 3, 4, 5}, UniformInit{}), random_fill(b, Shape{2, 3, 4, 5}, UniformInit{})));

  Rng u(8);
  const Tensor t = random_fill(u, Shape{1, 1, 100, 100}, UniformInit{0.0, 1.0});
  double sum = 0.0;
  for (float v : t.values()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    sum += v;
  }
  CHECK(std::abs(sum / t.size() - 0.5) <= 0.02);

  Rng g(9);
  const Tensor h = random_fill(g, Shape{1, 1, 100, 100}, ScaledNormalInit{100});
  double s = 0.0, sq = 0.0;
  for (float v : h.values()) {
    s += v;
    sq += static_cast<double>(v) * v;
  }
  const double mean = s / h.size();
  const double sd = std::sqrt(sq / h.size() - mean * mean);
  CHECK(std::abs(sd - 0.1414) <= 0.15 * 0.1414);
}

TEST_CASE("primitives are bit-deterministic") {
  Rng rng(10);
  const Tensor x = random_fill(rng, Shape{2, 3, 9, 9}, UniformInit{-1.0, 1.0});
  const Tensor w = random_fill(rng, Shape{4, 3, 5, 5}, UniformInit{-1.0, 1.0});
  const std::vector<float> b = {0.1f, 0.2f, 0.3f, 0.4f};
  CHECK(bit_equal(conv2d(x, w, std::span<const float>(b), Padding::kSame),
                  conv2d(x, w, std::span<const float>(b), Padding::kSame)));
  CHECK(maxpool2(x).argmax == maxpool2(x).argmax);
}

TEST_CASE("raw tensor exchange round trip and layout") {
  Rng rng(12);
  const Tensor t = random_fill(rng, Shape{2, 1, 3, 4}, UniformInit{-5.0, 5.0});
  std::stringstream ss;
  write_tensor(ss, t);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == kTensorHeaderBytes + 4 * t.size());
  CHECK(bytes.substr(0, 4) == "GWT1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);  // n, little-endian
  CHECK(static_cast<unsigned char>(bytes[16]) == 4);  // w
  CHECK(bit_equal(read_tensor(ss), t));

  std::stringstream bad("GWT2" + bytes.substr(4));
  CHECK_THROWS_AS(read_tensor(bad), FormatError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_tensor(cut), FormatError);
  std::string nan_bytes = bytes;
  const float nan = NAN;
  std::memcpy(nan_bytes.data() + kTensorHeaderBytes, &nan, 4);
  std::stringstream with_nan(nan_bytes);
  CHECK_THROWS_AS(read_tensor(with_nan), FormatError);
}
