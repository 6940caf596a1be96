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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwavenet/image.hpp"
#include "gwavenet/label.hpp"
#include "gwavenet/rng.hpp"
#include "gwavenet/tensor.hpp"

namespace gwavenet::data {

// ---------------------------------------------------------------------------
// Raw-array normalization and patching

/// v' = v - min(v), then v'' = 0.5 v' / median(v'). Throws ValueError when the
/// median of the shifted values is not positive (e.g. a constant array).
MatrixD normalize_raw_linear(const Matrix& raw);

/// normalize_raw_linear followed by empirical-CDF uniformization: every value
/// becomes its rank (ties share their average rank), min-max scaled so the
/// smallest value maps to 0 and the largest to 1. Without ties this is exactly
/// rank / (N - 1).
Image normalize_raw(const Matrix& raw);

/// Tiles of `size` x `size` taken every `stride` pixels (stride 0 means
/// `size`, i.e. non-overlapping). Trailing partial tiles are dropped.
std::vector<Image> extract_patches(const Image& img, std::size_t size = 200, std::size_t stride = 0);

// ---------------------------------------------------------------------------
// Augmentation

enum class View { kIdentity, kRot90, kRot180, kRot270, kFlipH, kFlipV };

std::string_view to_string(View view);

/// Rotation by 90 degrees counter-clockwise.
Image rotate90(const Image& img);
/// Mirror left-right.
Image flip_horizontal(const Image& img);
/// Mirror top-bottom.
Image flip_vertical(const Image& img);
Image apply_view(const Image& img, View view);

struct AugmentedView {
  View view;
  Image image;
};

/// Identity, the three rotations and both flips, minus bit-identical
/// duplicates (first occurrence kept). Square patches only.
std::vector<AugmentedView> augment(const Image& patch);

// ---------------------------------------------------------------------------
// Synthetic gravity-wave patches

/// Parameter ranges of the synthetic generator. Amplitudes are in image units
/// ([0, 1] dynamic range), lengths in pixels.
struct NoiseProfile {
  std::size_t patch_size = 200;

  double background_min = 0.3;       // mean brightness range
  double background_max = 0.5;
  double background_wave_amplitude = 0.06;  // each of three low-frequency terms
  std::size_t background_max_cycles = 2;    // per patch side

  double pixel_noise_sigma = 0.08;

  std::size_t max_city_lights = 3;
  double city_light_amplitude_min = 0.3;
  double city_light_amplitude_max = 0.8;
  double city_light_radius_min = 1.5;
  double city_light_radius_max = 4.0;

  std::size_t max_lines = 2;
  double line_amplitude_min = 0.05;
  double line_amplitude_max = 0.2;

  double cloud_probability = 0.5;
  double cloud_amplitude_min = 0.1;
  double cloud_amplitude_max = 0.3;
  double cloud_radius_min = 25.0;
  double cloud_radius_max = 60.0;

  double wavelength_min = 8.0;
  double wavelength_max = 40.0;
  double ripple_p2p_min = 0.1;
  double ripple_p2p_max = 0.4;
  double envelope_sigma_min = 30.0;
  double envelope_sigma_max = 70.0;

  /// 1: the clamped patch goes through normalize_raw, as real arrays do, so
  /// every patch has the same value distribution. 0: clamp only.
  std::size_t uniformize = 1;

  /// Throws ValueError on empty or inverted ranges.
  void validate() const;
};

/// Reads key=value lines (blank lines and '#' comments allowed) over the
/// defaults. Unknown keys are rejected.
NoiseProfile parse_noise_profile(const std::string& text);
NoiseProfile load_noise_profile(const std::filesystem::path& path);
std::string format_noise_profile(const NoiseProfile& profile);

/// Ground truth of the ripple field of a gw patch.
struct RippleInfo {
  double wavelength = 0.0;  // pixels
  double theta = 0.0;       // propagation direction, radians
  double phase = 0.0;
  double amplitude = 0.0;   // half the peak-to-peak swing
  double centre_x = 0.0;
  double centre_y = 0.0;
  double envelope_sigma = 0.0;

  /// Gaussian envelope weight in [0, 1] at pixel (x, y).
  double envelope(double x, double y) const;
};

struct SynthPatch {
  Image image;
  std::optional<RippleInfo> ripple;  // set for gw patches
};

/// Smooth background + optional cloud + (gw only) enveloped ripple + city
/// lights + instrument lines + Gaussian pixel noise, clamped to [0, 1], then
/// uniformized when the profile asks for it.
SynthPatch synth_patch(Rng& rng, Label label, const NoiseProfile& profile);

// ---------------------------------------------------------------------------
// Datasets

enum class Split { kUnassigned, kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split split_from_string(std::string_view s);

struct Sample {
  /// Relative file name, e.g. "gw/gw_00003.pgm".
  std::string id;
  Image image;
  Label label = Label::kNgw;
  Split split = Split::kUnassigned;
  /// "synthetic", "real" or "augmented-from:<id>".
  std::string provenance = "synthetic";
  std::optional<RippleInfo> ripple;
};

struct PatchDataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t count(Label label) const;
  std::size_t count(Split split) const;
  std::size_t count(Label label, Split split) const;
  std::vector<std::size_t> indices(Split split) const;
};

/// n_per_class patches of each class; patch i of class c is drawn from its own
/// generator seeded with derive_seed(seed, 2 i + c), so any subset of patches
/// can be regenerated independently.
PatchDataset make_dataset(std::uint64_t seed, std::size_t n_per_class, const NoiseProfile& profile);

struct SplitOptions {
  double train_ratio = 0.65;  // of what remains after the test set
  std::size_t test_count = 240;
};

/// Stratified split: the test set (test_count, balanced across classes) is
/// drawn first, then each class's remainder is divided train:val at
/// train_ratio. Throws DataError when test_count >= dataset size.
PatchDataset split(const PatchDataset& dataset, const SplitOptions& options, std::uint64_t seed);

/// Keeps round(fraction * k) samples of every (label, split) group of k (at
/// least one of a non-empty group); test samples are always kept.
PatchDataset subsample(const PatchDataset& dataset, double fraction, std::uint64_t seed);

/// Appends the non-identity augmented views of every original sample in
/// `which`; views inherit label and split. Test samples are never augmented.
PatchDataset augment_split(const PatchDataset& dataset, Split which = Split::kTrain);

/// True when every augmented sample sits in the same split as its origin.
bool provenance_consistent(const PatchDataset& dataset);

/// Every patch replaced by filters::apply_filter(patch, kernel); labels,
/// splits and ids unchanged.
PatchDataset prefilter_kapt(const PatchDataset& dataset, const MatrixD& kernel);

/// Stacks the selected samples into a [n, 1, h, w] tensor.
Tensor to_batch(const PatchDataset& dataset, std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// On-disk layout: <root>/gw/*.pgm, <root>/ngw/*.pgm, optional labels.csv
// (filename,label) and splits.csv (filename,split).

struct WriteOptions {
  unsigned pgm_maxval = 255;
  /// Also write generator.csv with ripple ground truth.
  bool write_generator_metadata = true;
};

void write_dataset(const PatchDataset& dataset, const std::filesystem::path& root, const WriteOptions& options = {});

/// Loads every PGM under gw/ and ngw/ (sorted by name). labels.csv overrides
/// directory labels; splits.csv assigns splits; generator.csv restores ripple
/// metadata.
PatchDataset load_dataset(const std::filesystem::path& root);

void write_splits_csv(const PatchDataset& dataset, const std::filesystem::path& path);

}  // namespace gwavenet::data
