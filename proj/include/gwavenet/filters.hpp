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

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gwavenet/image.hpp"
#include "gwavenet/tensor.hpp"

namespace gwavenet::filters {

enum class KernelKind { kCheckerboard, kGabor, kSobel, kLaplacian };

/// Real Gabor parameters. Lengths in pixels, angles in radians.
struct GaborParams {
  double lambda = 4.0;  // wavelength
  double theta = 0.0;   // orientation
  double psi = 0.0;     // phase offset
  double sigma = 2.24;  // envelope width, 0.56 * lambda by default
  double gamma = 0.5;   // spatial aspect ratio

  /// sigma = 0.56 * lambda, gamma = 0.5, psi = 0.
  static GaborParams with_defaults(double lambda, double theta);
};

/// Orientations of the Gabor bank, in degrees.
inline constexpr std::array<double, 5> kGaborOrientationsDeg = {0.0, 30.0, 60.0, 120.0, 150.0};
inline constexpr double kDefaultGaborLambda = 4.0;
inline constexpr double kDefaultLogSigma = 1.0;

enum class SobelAxis { kX, kY };

struct KernelSpec {
  KernelKind kind = KernelKind::kCheckerboard;
  std::size_t size = 7;
  std::optional<GaborParams> gabor;
  double log_sigma = kDefaultLogSigma;
  SobelAxis sobel_axis = SobelAxis::kX;
};

/// K(x, y) = (x + y + 1) mod 2 for x, y in [0, w): ones on the even diagonals,
/// 1 at the origin, ceil(w*w/2) ones in total.
MatrixD checkerboard(std::size_t w);

/// g(x', y') = exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2)) cos(2 pi x' / lambda + psi)
/// with x' = x cos(theta) + y sin(theta), y' = -x sin(theta) + y cos(theta),
/// x the column and y the row offset from the kernel centre.
MatrixD gabor(const KernelSpec& spec);

struct SobelPair {
  MatrixD gx;
  MatrixD gy;
};

/// gx = [[-1,0,1],[-2,0,2],[-1,0,1]], gy = gx transposed.
SobelPair sobel();

/// Discrete Laplacian-of-Gaussian sampled on a w x w grid centred on the
/// middle cell, then shifted by its mean so the entries sum to zero.
MatrixD laplacian_log(std::size_t w, double sigma);

/// Builds the kernel described by `spec`.
MatrixD make_kernel(const KernelSpec& spec);

/// Parses "checkerboard:7", "gabor:7:30[:lambda]" (theta in degrees),
/// "sobel[:x|y]" and "laplacian:7[:sigma]". Throws ValueError listing the valid
/// forms on anything else.
KernelSpec parse_kernel_spec(std::string_view text);

std::string kernel_spec_usage();

/// Aligned decimal grid, one row per line. Integral kernels print without
/// decimals.
std::string format_kernel(const MatrixD& kernel, int precision = 4);

/// 2-D discrete Fourier transform of a row-major h x w complex array.
/// The inverse is unnormalized (divide by h*w yourself).
std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& data, std::size_t h,
                                       std::size_t w, bool inverse);

/// Keeps the DC term plus every Fourier coefficient whose magnitude reaches
/// the (1 - keep_fraction) quantile of all magnitudes, zeroes the rest, and
/// transforms back. Output clamped to [0, 1].
Image fft_denoise(const Image& img, double keep_fraction);

/// Same-padding single-channel correlation of `img` with `kernel`: exactly the
/// forward pass of a conv layer holding `kernel` (as float) and zero bias.
Matrix filter_response(const Image& img, const MatrixD& kernel);

/// Min-max rescale into [0, 1]. A constant map rescales to all zeros.
Image rescale_unit(const Matrix& values);

/// filter_response followed by rescale_unit.
Image apply_filter(const Image& img, const MatrixD& kernel);

}  // namespace gwavenet::filters
