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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gwavenet/error.hpp"
#include "gwavenet/rng.hpp"

namespace gwavenet {

/// (batch, channel, height, width). Every dimension is at least 1.
struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major 4-D array. The library stores activations and weights as
/// `Tensor` (float); `TensorD` exists so gradient checks can run the same code
/// path in double precision.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : BasicTensor(Shape{}) {}
  explicit BasicTensor(Shape shape, T fill = T(0));
  /// Takes ownership of `values`; rejects size mismatches and non-finite data.
  BasicTensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  T* plane(std::size_t n, std::size_t c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
  const T* plane(std::size_t n, std::size_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  /// Same values, new shape of equal size.
  BasicTensor reshaped(Shape shape) const;

  /// Copy of samples [first, first + count).
  BasicTensor slice_batch(std::size_t first, std::size_t count) const;

  /// Element-wise converted copy.
  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  /// Throws NumericError if any value is NaN or infinite.
  void check_finite(const char* what) const;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Bitwise equality of shape and every stored value.
template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Row-major 2-D array used for kernels, images and dense-layer products.
template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0));
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> values);
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  BasicMatrix transposed() const;

  template <typename U>
  BasicMatrix<U> cast() const {
    return BasicMatrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

enum class Padding { kSame, kValid };

/// Stride-1 2-D cross-correlation (the kernel is not flipped).
///
///   out[n,f,y,x] = bias[f] + sum_{c,i,j} w[f,c,i,j] * in[n,c,y+i-p,x+j-p]
///
/// with p = (k-1)/2 zero padding for kSame and p = 0 for kValid. Products are
/// accumulated in double in the fixed order (c, i, j) and rounded once.
/// Weights are [f, c, k, k] with k odd.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights, std::span<const T> bias,
                      Padding padding);

/// Gradient of conv2d with respect to its input, for output gradient `dy`.
template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& dy, const BasicTensor<T>& weights, const Shape& input_shape,
                                 Padding padding);

/// Gradients of conv2d with respect to weights and bias, summed over the batch.
template <typename T>
void conv2d_grad_params(const BasicTensor<T>& input, const BasicTensor<T>& dy, Padding padding,
                        BasicTensor<T>& dweights, BasicTensor<T>& dbias);

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  /// Flat input index of the winner for every output cell.
  std::vector<std::uint32_t> argmax;
};

/// 2x2 max pooling, stride 2, odd trailing row/column dropped. Ties go to the
/// smallest flat index.
template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& input);

/// Routes each dy cell to its recorded argmax position.
template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dy, std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape);

/// Standard product with double accumulation, summed left to right over k.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

struct UniformInit {
  double lo = 0.0;
  double hi = 1.0;
};

/// He-style normal: mean 0, std = sqrt(2 / fan_in).
struct ScaledNormalInit {
  std::size_t fan_in = 1;
};

Tensor random_fill(Rng& rng, Shape shape, UniformInit scheme);
Tensor random_fill(Rng& rng, Shape shape, ScaledNormalInit scheme);

/// [n, c*h*w] view of a tensor as a matrix, and back as [rows, cols, 1, 1].
template <typename T>
BasicMatrix<T> to_matrix(const BasicTensor<T>& t);
template <typename T>
BasicTensor<T> to_tensor(const BasicMatrix<T>& m);

}  // namespace gwavenet
