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

#include "gwavenet/filters.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>

namespace gwavenet::filters {

namespace {

std::vector<std::string_view> split_colon(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_number(std::string_view s, std::string_view spec) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValueError("bad number '" + std::string(s) + "' in kernel spec '" + std::string(spec) + "'\n" +
                     kernel_spec_usage());
  }
  return v;
}

std::size_t parse_size(std::string_view s, std::string_view spec) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v == 0) {
    throw ValueError("bad kernel size '" + std::string(s) + "' in kernel spec '" + std::string(spec) + "'\n" +
                     kernel_spec_usage());
  }
  return v;
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

GaborParams GaborParams::with_defaults(double lambda, double theta) {
  GaborParams p;
  p.lambda = lambda;
  p.theta = theta;
  p.sigma = 0.56 * lambda;
  p.gamma = 0.5;
  p.psi = 0.0;
  return p;
}

MatrixD checkerboard(std::size_t w) {
  if (w == 0) throw ValueError("checkerboard kernel size must be >= 1");
  MatrixD k(w, w);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < w; ++y) k(x, y) = static_cast<double>((x + y + 1) % 2);
  }
  return k;
}

MatrixD gabor(const KernelSpec& spec) {
  if (!spec.gabor) throw ValueError("gabor kernel requested without gabor parameters");
  const GaborParams& p = *spec.gabor;
  if (!(p.sigma > 0.0)) throw ValueError("gabor sigma must be > 0");
  if (!(p.lambda > 0.0)) throw ValueError("gabor lambda must be > 0");
  if (spec.size == 0) throw ValueError("gabor kernel size must be >= 1");

  const double centre = (static_cast<double>(spec.size) - 1.0) / 2.0;
  const double ct = std::cos(p.theta);
  const double st = std::sin(p.theta);
  MatrixD k(spec.size, spec.size);
  for (std::size_t r = 0; r < spec.size; ++r) {
    for (std::size_t c = 0; c < spec.size; ++c) {
      const double x = static_cast<double>(c) - centre;
      const double y = static_cast<double>(r) - centre;
      const double xr = x * ct + y * st;
      const double yr = -x * st + y * ct;
      const double envelope = std::exp(-(xr * xr + p.gamma * p.gamma * yr * yr) / (2.0 * p.sigma * p.sigma));
      k(r, c) = envelope * std::cos(2.0 * std::numbers::pi * xr / p.lambda + p.psi);
    }
  }
  return k;
}

SobelPair sobel() {
  MatrixD gx{{-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}};
  return {gx, gx.transposed()};
}

MatrixD laplacian_log(std::size_t w, double sigma) {
  if (w % 2 == 0) throw ValueError("Laplacian-of-Gaussian size must be odd, got " + std::to_string(w));
  if (!(sigma > 0.0)) throw ValueError("Laplacian-of-Gaussian sigma must be > 0");
  const auto half = static_cast<long>(w / 2);
  const double s2 = sigma * sigma;
  const double scale = -1.0 / (std::numbers::pi * s2 * s2);
  MatrixD k(w, w);
  double mean = 0.0;
  for (long y = -half; y <= half; ++y) {
    for (long x = -half; x <= half; ++x) {
      const double r2 = static_cast<double>(x * x + y * y);
      const double v = scale * (1.0 - r2 / (2.0 * s2)) * std::exp(-r2 / (2.0 * s2));
      k(static_cast<std::size_t>(y + half), static_cast<std::size_t>(x + half)) = v;
      mean += v;
    }
  }
  mean /= static_cast<double>(w * w);
  for (double& v : k.values()) v -= mean;
  return k;
}

MatrixD make_kernel(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::kCheckerboard:
      return checkerboard(spec.size);
    case KernelKind::kGabor:
      return gabor(spec);
    case KernelKind::kSobel: {
      if (spec.size != 3) throw ValueError("sobel kernels are 3x3");
      SobelPair pair = sobel();
      return spec.sobel_axis == SobelAxis::kX ? pair.gx : pair.gy;
    }
    case KernelKind::kLaplacian:
      return laplacian_log(spec.size, spec.log_sigma);
  }
  throw ValueError("unknown kernel kind");
}

std::string kernel_spec_usage() {
  return "valid kernel specs: checkerboard:<w> (w >= 1; canonical 3|5|7|9), gabor:<w>:<theta_deg>[:<lambda>], "
         "sobel[:x|y], laplacian:<odd w>[:<sigma>]";
}

KernelSpec parse_kernel_spec(std::string_view text) {
  const auto parts = split_colon(text);
  const std::string_view kind = parts[0];
  KernelSpec spec;
  if (kind == "checkerboard" && parts.size() == 2) {
    spec.kind = KernelKind::kCheckerboard;
    spec.size = parse_size(parts[1], text);
    return spec;
  }
  if (kind == "gabor" && (parts.size() == 3 || parts.size() == 4)) {
    spec.kind = KernelKind::kGabor;
    spec.size = parse_size(parts[1], text);
    const double theta = parse_number(parts[2], text) * std::numbers::pi / 180.0;
    const double lambda = parts.size() == 4 ? parse_number(parts[3], text) : kDefaultGaborLambda;
    if (!(lambda > 0.0)) throw ValueError("gabor lambda must be > 0\n" + kernel_spec_usage());
    spec.gabor = GaborParams::with_defaults(lambda, theta);
    return spec;
  }
  if (kind == "sobel" && parts.size() <= 2) {
    spec.kind = KernelKind::kSobel;
    spec.size = 3;
    if (parts.size() == 2) {
      if (parts[1] == "x") {
        spec.sobel_axis = SobelAxis::kX;
      } else if (parts[1] == "y") {
        spec.sobel_axis = SobelAxis::kY;
      } else {
        throw ValueError("sobel axis must be x or y\n" + kernel_spec_usage());
      }
    }
    return spec;
  }
  if (kind == "laplacian" && (parts.size() == 2 || parts.size() == 3)) {
    spec.kind = KernelKind::kLaplacian;
    spec.size = parse_size(parts[1], text);
    if (spec.size % 2 == 0) throw ValueError("laplacian size must be odd\n" + kernel_spec_usage());
    if (parts.size() == 3) spec.log_sigma = parse_number(parts[2], text);
    if (!(spec.log_sigma > 0.0)) throw ValueError("laplacian sigma must be > 0\n" + kernel_spec_usage());
    return spec;
  }
  throw ValueError("unrecognized kernel spec '" + std::string(text) + "'\n" + kernel_spec_usage());
}

std::string format_kernel(const MatrixD& kernel, int precision) {
  bool integral = true;
  for (double v : kernel.values()) {
    if (v != std::round(v)) integral = false;
  }
  std::vector<std::string> cells;
  std::size_t width = 0;
  for (double v : kernel.values()) {
    std::ostringstream os;
    if (integral) {
      os << static_cast<long long>(std::llround(v));
    } else {
      os << std::fixed << std::setprecision(precision) << (v == 0.0 ? 0.0 : v);
    }
    cells.push_back(os.str());
    width = std::max(width, cells.back().size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < kernel.rows(); ++r) {
    for (std::size_t c = 0; c < kernel.cols(); ++c) {
      if (c > 0) out << ' ';
      out << std::setw(static_cast<int>(width)) << cells[r * kernel.cols() + c];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& data, std::size_t h,
                                       std::size_t w, bool inverse) {
  if (data.size() != h * w) throw ShapeError("dft2: data size does not match h*w");
  std::unique_ptr<fftw_complex, FftwDeleter> in(fftw_alloc_complex(h * w));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(h * w));
  // Plan before filling: FFTW_ESTIMATE does not touch the arrays, but other
  // flags would.
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in.get(), out.get(),
                                    inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < data.size(); ++i) {
    in.get()[i][0] = data[i].real();
    in.get()[i][1] = data[i].imag();
  }
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<std::complex<double>> result(h * w);
  for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out.get()[i][0], out.get()[i][1]};
  return result;
}

Image fft_denoise(const Image& img, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ValueError("fft_denoise keep_fraction must lie in (0, 1], got " + std::to_string(keep_fraction));
  }
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (h < 2 || w < 2) throw ValueError("fft_denoise needs an image of at least 2x2");
  const std::size_t count = h * w;

  std::vector<std::complex<double>> signal(count);
  for (std::size_t i = 0; i < count; ++i) signal[i] = img.values()[i];
  std::vector<std::complex<double>> spectrum = dft2(signal, h, w, false);

  std::vector<double> magnitude(count);
  for (std::size_t i = 0; i < count; ++i) magnitude[i] = std::abs(spectrum[i]);
  std::vector<double> sorted = magnitude;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(count) - 1e-9)), 1, count);
  const double threshold = sorted[keep - 1];
  for (std::size_t i = 1; i < count; ++i) {
    if (magnitude[i] < threshold) spectrum[i] = 0.0;
  }

  const std::vector<std::complex<double>> restored = dft2(spectrum, h, w, true);
  Matrix out(h, w);
  for (std::size_t i = 0; i < count; ++i) {
    out.values()[i] = static_cast<float>(std::clamp(restored[i].real() / static_cast<double>(count), 0.0, 1.0));
  }
  return Image(std::move(out));
}

Matrix filter_response(const Image& img, const MatrixD& kernel) {
  if (kernel.rows() != kernel.cols()) throw ShapeError("filter kernel must be square");
  if (kernel.rows() > img.height() || kernel.cols() > img.width()) {
    throw ValueError("filter kernel " + std::to_string(kernel.rows()) + "x" + std::to_string(kernel.cols()) +
                     " is larger than the image " + std::to_string(img.height()) + "x" +
                     std::to_string(img.width()));
  }
  const std::size_t k = kernel.rows();
  std::vector<float> weights(kernel.values().begin(), kernel.values().end());
  const Tensor w(Shape{1, 1, k, k}, std::move(weights));
  const float bias[1] = {0.0f};
  const Tensor response = conv2d(img.as_tensor(), w, std::span<const float>(bias), Padding::kSame);
  return Matrix(img.height(), img.width(), std::vector<float>(response.values().begin(), response.values().end()));
}

Image rescale_unit(const Matrix& values) {
  if (values.size() == 0) throw ShapeError("cannot rescale an empty map");
  const auto [lo_it, hi_it] = std::minmax_element(values.values().begin(), values.values().end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  Matrix out(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = range > 0.0 ? (static_cast<double>(values.values()[i]) - lo) / range : 0.0;
    out.values()[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return Image(std::move(out));
}

Image apply_filter(const Image& img, const MatrixD& kernel) { return rescale_unit(filter_response(img, kernel)); }

}  // namespace gwavenet::filters
