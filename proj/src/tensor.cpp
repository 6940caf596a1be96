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

#include "gwavenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace gwavenet {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << ", " << c << ", " << h << ", " << w << ']';
  return os.str();
}

namespace {

void check_dims(const Shape& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("tensor dimensions must all be >= 1, got " + s.str());
  }
}

// Dot product with eight independent double partial sums, combined in a fixed
// order. Independent lanes let the compiler vectorize without reassociating.
template <typename T>
double dot_fixed(const T* a, const T* b, std::size_t n) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t x = 0;
  for (; x + 8 <= n; x += 8) {
    for (std::size_t q = 0; q < 8; ++q) {
      lanes[q] += static_cast<double>(a[x + q]) * static_cast<double>(b[x + q]);
    }
  }
  double tail = 0.0;
  for (; x < n; ++x) tail += static_cast<double>(a[x]) * static_cast<double>(b[x]);
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

template <typename T>
double sum_fixed(const T* a, std::size_t n) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t x = 0;
  for (; x + 8 <= n; x += 8) {
    for (std::size_t q = 0; q < 8; ++q) lanes[q] += static_cast<double>(a[x + q]);
  }
  double tail = 0.0;
  for (; x < n; ++x) tail += static_cast<double>(a[x]);
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

struct ConvGeometry {
  std::size_t k;
  std::size_t pad;
  std::size_t out_h;
  std::size_t out_w;
};

template <typename T>
ConvGeometry conv_geometry(const Shape& in, const BasicTensor<T>& weights, Padding padding) {
  const Shape& ws = weights.shape();
  if (ws.h != ws.w) throw ShapeError("conv2d: kernel must be square, got " + ws.str());
  const std::size_t k = ws.h;
  if (k % 2 == 0) throw ValueError("conv2d: kernel size must be odd, got " + std::to_string(k));
  if (ws.c != in.c) {
    throw ShapeError("conv2d: weight channels " + std::to_string(ws.c) + " != input channels " +
                     std::to_string(in.c) + " (weights " + ws.str() + ", input " + in.str() + ")");
  }
  if (padding == Padding::kSame) {
    return {k, (k - 1) / 2, in.h, in.w};
  }
  if (k > in.h || k > in.w) {
    throw ShapeError("conv2d: valid mode needs kernel " + std::to_string(k) + " <= input " + in.str());
  }
  return {k, 0, in.h - k + 1, in.w - k + 1};
}

// Output rows y for which input row y + i - pad lies inside [0, extent).
struct Range {
  std::size_t lo;
  std::size_t hi;
};

inline Range overlap(std::size_t out_extent, std::size_t in_extent, std::size_t pad, std::size_t offset) {
  // y + offset - pad in [0, in_extent)
  const std::size_t lo = pad > offset ? pad - offset : 0;
  const std::size_t limit = in_extent + pad;  // y < in_extent + pad - offset
  std::size_t hi = limit > offset ? limit - offset : 0;
  hi = std::min(hi, out_extent);
  return {std::min(lo, hi), hi};
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(shape) {
  check_dims(shape_);
  if (!std::isfinite(static_cast<double>(fill))) throw NumericError("tensor fill value is not finite");
  data_.assign(shape_.size(), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
  check_dims(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                     " values, got " + std::to_string(data_.size()));
  }
  check_finite("tensor values");
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  check_dims(shape);
  if (shape.size() != size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  BasicTensor out = *this;
  out.shape_ = shape;
  return out;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::slice_batch(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > shape_.n) {
    throw ShapeError("batch slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                     ") outside " + shape_.str());
  }
  Shape s = shape_;
  s.n = count;
  const std::size_t per = shape_.c * shape_.plane();
  std::vector<T> values(data_.begin() + static_cast<std::ptrdiff_t>(first * per),
                        data_.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
  BasicTensor out(s);
  out.data_ = std::move(values);
  return out;
}

template <typename T>
void BasicTensor<T>::check_finite(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(static_cast<double>(data_[i]))) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (!(a.shape() == b.shape())) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, T fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " needs " +
                     std::to_string(rows_ * cols_) + " values, got " + std::to_string(data_.size()));
  }
}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::transposed() const {
  BasicMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights, std::span<const T> bias,
                      Padding padding) {
  const Shape& in = input.shape();
  const ConvGeometry g = conv_geometry(in, weights, padding);
  const std::size_t filters = weights.shape().n;
  if (bias.size() != filters) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries for " +
                     std::to_string(filters) + " filters");
  }

  BasicTensor<T> out(Shape{in.n, filters, g.out_h, g.out_w});
  std::vector<double> acc(g.out_h * g.out_w);
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t f = 0; f < filters; ++f) {
      std::fill(acc.begin(), acc.end(), static_cast<double>(bias[f]));
      for (std::size_t c = 0; c < in.c; ++c) {
        const T* src = input.plane(n, c);
        for (std::size_t i = 0; i < g.k; ++i) {
          const Range ys = overlap(g.out_h, in.h, g.pad, i);
          for (std::size_t j = 0; j < g.k; ++j) {
            const double wv = static_cast<double>(weights.at(f, c, i, j));
            if (wv == 0.0) continue;
            const Range xs = overlap(g.out_w, in.w, g.pad, j);
            for (std::size_t y = ys.lo; y < ys.hi; ++y) {
              const T* row = src + (y + i - g.pad) * in.w;
              double* a = acc.data() + y * g.out_w;
              for (std::size_t x = xs.lo; x < xs.hi; ++x) {
                a[x] += wv * static_cast<double>(row[x + j - g.pad]);
              }
            }
          }
        }
      }
      T* dst = out.plane(n, f);
      for (std::size_t q = 0; q < acc.size(); ++q) dst[q] = static_cast<T>(acc[q]);
    }
  }
  out.check_finite("conv2d output");
  return out;
}

template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& dy, const BasicTensor<T>& weights, const Shape& input_shape,
                                 Padding padding) {
  const ConvGeometry g = conv_geometry(input_shape, weights, padding);
  const std::size_t filters = weights.shape().n;
  const Shape expected{input_shape.n, filters, g.out_h, g.out_w};
  if (!(dy.shape() == expected)) {
    throw ShapeError("conv2d backward: dy shape " + dy.shape().str() + " != forward output " + expected.str());
  }
  BasicTensor<T> dx(input_shape);
  std::vector<double> acc(input_shape.plane());
  for (std::size_t n = 0; n < input_shape.n; ++n) {
    for (std::size_t c = 0; c < input_shape.c; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t f = 0; f < filters; ++f) {
        const T* grad = dy.plane(n, f);
        for (std::size_t i = 0; i < g.k; ++i) {
          const Range ys = overlap(g.out_h, input_shape.h, g.pad, i);
          for (std::size_t j = 0; j < g.k; ++j) {
            const double wv = static_cast<double>(weights.at(f, c, i, j));
            if (wv == 0.0) continue;
            const Range xs = overlap(g.out_w, input_shape.w, g.pad, j);
            for (std::size_t y = ys.lo; y < ys.hi; ++y) {
              double* a = acc.data() + (y + i - g.pad) * input_shape.w;
              const T* row = grad + y * g.out_w;
              for (std::size_t x = xs.lo; x < xs.hi; ++x) {
                a[x + j - g.pad] += wv * static_cast<double>(row[x]);
              }
            }
          }
        }
      }
      T* dst = dx.plane(n, c);
      for (std::size_t q = 0; q < acc.size(); ++q) dst[q] = static_cast<T>(acc[q]);
    }
  }
  return dx;
}

template <typename T>
void conv2d_grad_params(const BasicTensor<T>& input, const BasicTensor<T>& dy, Padding padding,
                        BasicTensor<T>& dweights, BasicTensor<T>& dbias) {
  const Shape& in = input.shape();
  const ConvGeometry g = conv_geometry(in, dweights, padding);
  const std::size_t filters = dweights.shape().n;
  const Shape expected{in.n, filters, g.out_h, g.out_w};
  if (!(dy.shape() == expected)) {
    throw ShapeError("conv2d backward: dy shape " + dy.shape().str() + " != forward output " + expected.str());
  }
  if (dbias.size() != filters) throw ShapeError("conv2d backward: bias gradient size mismatch");

  for (std::size_t f = 0; f < filters; ++f) {
    double bsum = 0.0;
    for (std::size_t n = 0; n < in.n; ++n) bsum += sum_fixed(dy.plane(n, f), expected.plane());
    dbias[f] = static_cast<T>(bsum);

    for (std::size_t c = 0; c < in.c; ++c) {
      for (std::size_t i = 0; i < g.k; ++i) {
        const Range ys = overlap(g.out_h, in.h, g.pad, i);
        for (std::size_t j = 0; j < g.k; ++j) {
          const Range xs = overlap(g.out_w, in.w, g.pad, j);
          double s = 0.0;
          if (xs.hi > xs.lo) {
            for (std::size_t n = 0; n < in.n; ++n) {
              const T* grad = dy.plane(n, f);
              const T* src = input.plane(n, c);
              for (std::size_t y = ys.lo; y < ys.hi; ++y) {
                s += dot_fixed(grad + y * g.out_w + xs.lo, src + (y + i - g.pad) * in.w + xs.lo + j - g.pad,
                               xs.hi - xs.lo);
              }
            }
          }
          dweights.at(f, c, i, j) = static_cast<T>(s);
        }
      }
    }
  }
}

template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& input) {
  const Shape& in = input.shape();
  if (in.h < 2 || in.w < 2) throw ValueError("maxpool2: input " + in.str() + " is smaller than 2x2");
  if (in.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("maxpool2: tensor too large for 32-bit argmax indices");
  }
  const std::size_t oh = in.h / 2;
  const std::size_t ow = in.w / 2;
  PoolResult<T> result{BasicTensor<T>(Shape{in.n, in.c, oh, ow}), {}};
  result.argmax.resize(result.output.size());
  std::size_t o = 0;
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t c = 0; c < in.c; ++c) {
      const std::size_t base = (n * in.c + c) * in.plane();
      const T* src = input.data() + base;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x, ++o) {
          const std::size_t top = 2 * y * in.w + 2 * x;
          const std::size_t candidates[4] = {top, top + 1, top + in.w, top + in.w + 1};
          std::size_t best = candidates[0];
          for (std::size_t q = 1; q < 4; ++q) {
            if (src[candidates[q]] > src[best]) best = candidates[q];
          }
          result.output[o] = src[best];
          result.argmax[o] = static_cast<std::uint32_t>(base + best);
        }
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dy, std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape) {
  if (argmax.size() != dy.size()) {
    throw ShapeError("maxpool2 backward: argmax has " + std::to_string(argmax.size()) + " entries for dy " +
                     dy.shape().str());
  }
  BasicTensor<T> dx(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) {
    if (argmax[o] >= dx.size()) throw ShapeError("maxpool2 backward: argmax index outside input");
    dx[argmax[o]] += dy[o];
  }
  return dx;
}

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " by " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
  BasicMatrix<T> out(a.rows(), b.cols());
  std::vector<double> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = static_cast<double>(a(i, k));
      const T* brow = &b.values()[k * b.cols()];
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += av * static_cast<double>(brow[j]);
    }
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = static_cast<T>(acc[j]);
  }
  return out;
}

Tensor random_fill(Rng& rng, Shape shape, UniformInit scheme) {
  check_dims(shape);
  std::vector<float> values(shape.size());
  for (auto& v : values) v = static_cast<float>(rng.uniform(scheme.lo, scheme.hi));
  return Tensor(shape, std::move(values));
}

Tensor random_fill(Rng& rng, Shape shape, ScaledNormalInit scheme) {
  check_dims(shape);
  if (scheme.fan_in == 0) throw ValueError("scaled-normal init needs fan_in >= 1");
  const double stddev = std::sqrt(2.0 / static_cast<double>(scheme.fan_in));
  std::vector<float> values(shape.size());
  for (auto& v : values) v = static_cast<float>(rng.normal() * stddev);
  return Tensor(shape, std::move(values));
}

template <typename T>
BasicMatrix<T> to_matrix(const BasicTensor<T>& t) {
  const Shape& s = t.shape();
  return BasicMatrix<T>(s.n, s.c * s.h * s.w, std::vector<T>(t.values().begin(), t.values().end()));
}

template <typename T>
BasicTensor<T> to_tensor(const BasicMatrix<T>& m) {
  return BasicTensor<T>(Shape{m.rows(), m.cols(), 1, 1}, std::vector<T>(m.values().begin(), m.values().end()));
}

#define GWAVENET_INSTANTIATE(T)                                                                                \
  template class BasicTensor<T>;                                                                               \
  template class BasicMatrix<T>;                                                                               \
  template bool bit_equal(const BasicTensor<T>&, const BasicTensor<T>&);                                       \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, std::span<const T>, Padding);   \
  template BasicTensor<T> conv2d_grad_input(const BasicTensor<T>&, const BasicTensor<T>&, const Shape&,        \
                                            Padding);                                                          \
  template void conv2d_grad_params(const BasicTensor<T>&, const BasicTensor<T>&, Padding, BasicTensor<T>&,     \
                                   BasicTensor<T>&);                                                           \
  template PoolResult<T> maxpool2(const BasicTensor<T>&);                                                      \
  template BasicTensor<T> maxpool2_backward(const BasicTensor<T>&, std::span<const std::uint32_t>,             \
                                            const Shape&);                                                     \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);                                \
  template BasicMatrix<T> to_matrix(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> to_tensor(const BasicMatrix<T>&);

GWAVENET_INSTANTIATE(float)
GWAVENET_INSTANTIATE(double)

#undef GWAVENET_INSTANTIATE

}  // namespace gwavenet
