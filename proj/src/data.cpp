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

#include "gwavenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "gwavenet/filters.hpp"
#include "gwavenet/pgm.hpp"

namespace gwavenet::data {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("bad number '" + s + "' in " + context);
  }
  return v;
}

double gaussian(double dx, double dy, double sigma) { return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)); }

}  // namespace

// ---------------------------------------------------------------------------
// Normalization and patching

MatrixD normalize_raw_linear(const Matrix& raw) {
  if (raw.size() == 0) throw ShapeError("cannot normalize an empty array");
  for (float v : raw.values()) {
    if (!std::isfinite(v)) throw NumericError("raw array contains a non-finite value");
  }
  const double lo = *std::min_element(raw.values().begin(), raw.values().end());
  std::vector<double> shifted(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) shifted[i] = static_cast<double>(raw.values()[i]) - lo;

  std::vector<double> sorted = shifted;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  if (!(median > 0.0)) {
    throw ValueError("raw array cannot be normalized: median after subtracting the minimum is zero");
  }
  MatrixD out(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = 0.5 * shifted[i] / median;
  return out;
}

Image normalize_raw(const Matrix& raw) {
  const MatrixD scaled = normalize_raw_linear(raw);
  const std::size_t n = scaled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scaled.values()[a] < scaled.values()[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scaled.values()[order[j + 1]] == scaled.values()[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j);
    for (std::size_t q = i; q <= j; ++q) rank[order[q]] = average;
    i = j + 1;
  }
  const double lo = rank[order.front()];
  const double hi = rank[order.back()];
  Matrix out(scaled.rows(), scaled.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.values()[i] = static_cast<float>(std::clamp((rank[i] - lo) / (hi - lo), 0.0, 1.0));
  }
  return Image(std::move(out));
}

std::vector<Image> extract_patches(const Image& img, std::size_t size, std::size_t stride) {
  if (size == 0) throw ValueError("patch size must be >= 1");
  if (stride == 0) stride = size;
  if (img.height() < size || img.width() < size) {
    throw ValueError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                     " is smaller than the patch size " + std::to_string(size));
  }
  std::vector<Image> patches;
  for (std::size_t y = 0; y + size <= img.height(); y += stride) {
    for (std::size_t x = 0; x + size <= img.width(); x += stride) {
      Matrix tile(size, size);
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) tile(r, c) = img(y + r, x + c);
      }
      patches.emplace_back(std::move(tile));
    }
  }
  return patches;
}

// ---------------------------------------------------------------------------
// Augmentation

std::string_view to_string(View view) {
  switch (view) {
    case View::kIdentity: return "identity";
    case View::kRot90: return "rot90";
    case View::kRot180: return "rot180";
    case View::kRot270: return "rot270";
    case View::kFlipH: return "fliph";
    case View::kFlipV: return "flipv";
  }
  return "unknown";
}

Image rotate90(const Image& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  Matrix out(w, h);
  for (std::size_t r = 0; r < w; ++r) {
    for (std::size_t c = 0; c < h; ++c) out(r, c) = img(c, w - 1 - r);
  }
  return Image(std::move(out));
}

Image flip_horizontal(const Image& img) {
  Matrix out(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) out(r, c) = img(r, img.width() - 1 - c);
  }
  return Image(std::move(out));
}

Image flip_vertical(const Image& img) {
  Matrix out(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) out(r, c) = img(img.height() - 1 - r, c);
  }
  return Image(std::move(out));
}

Image apply_view(const Image& img, View view) {
  switch (view) {
    case View::kIdentity: return img;
    case View::kRot90: return rotate90(img);
    case View::kRot180: return rotate90(rotate90(img));
    case View::kRot270: return rotate90(rotate90(rotate90(img)));
    case View::kFlipH: return flip_horizontal(img);
    case View::kFlipV: return flip_vertical(img);
  }
  throw ValueError("unknown view");
}

std::vector<AugmentedView> augment(const Image& patch) {
  if (patch.height() != patch.width()) throw ValueError("augment needs a square patch");
  std::vector<AugmentedView> views;
  for (View v : {View::kIdentity, View::kRot90, View::kRot180, View::kRot270, View::kFlipH, View::kFlipV}) {
    Image img = apply_view(patch, v);
    const bool duplicate = std::any_of(views.begin(), views.end(), [&](const AugmentedView& seen) {
      return std::memcmp(seen.image.values().data(), img.values().data(), img.values().size_bytes()) == 0;
    });
    if (!duplicate) views.push_back({v, std::move(img)});
  }
  return views;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void NoiseProfile::validate() const {
  auto range = [](double lo, double hi, const char* name) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ValueError(std::string("noise profile: invalid range for ") + name);
    }
  };
  if (patch_size < 8) throw ValueError("noise profile: patch_size must be >= 8");
  range(background_min, background_max, "background");
  range(city_light_amplitude_min, city_light_amplitude_max, "city_light_amplitude");
  range(city_light_radius_min, city_light_radius_max, "city_light_radius");
  range(line_amplitude_min, line_amplitude_max, "line_amplitude");
  range(cloud_amplitude_min, cloud_amplitude_max, "cloud_amplitude");
  range(cloud_radius_min, cloud_radius_max, "cloud_radius");
  range(wavelength_min, wavelength_max, "wavelength");
  range(ripple_p2p_min, ripple_p2p_max, "ripple_p2p");
  range(envelope_sigma_min, envelope_sigma_max, "envelope_sigma");
  if (wavelength_min <= 0.0) throw ValueError("noise profile: wavelength must be > 0");
  if (city_light_radius_min <= 0.0 || cloud_radius_min <= 0.0 || envelope_sigma_min <= 0.0) {
    throw ValueError("noise profile: radii must be > 0");
  }
  if (pixel_noise_sigma < 0.0 || background_wave_amplitude < 0.0) {
    throw ValueError("noise profile: amplitudes must be >= 0");
  }
  if (cloud_probability < 0.0 || cloud_probability > 1.0) {
    throw ValueError("noise profile: cloud_probability must lie in [0, 1]");
  }
  if (uniformize > 1) throw ValueError("noise profile: uniformize must be 0 or 1");
}

namespace {

struct ProfileField {
  const char* name;
  double NoiseProfile::*real = nullptr;
  std::size_t NoiseProfile::*count = nullptr;
};

const std::vector<ProfileField>& profile_fields() {
  static const std::vector<ProfileField> fields = {
      {"patch_size", nullptr, &NoiseProfile::patch_size},
      {"background_min", &NoiseProfile::background_min},
      {"background_max", &NoiseProfile::background_max},
      {"background_wave_amplitude", &NoiseProfile::background_wave_amplitude},
      {"background_max_cycles", nullptr, &NoiseProfile::background_max_cycles},
      {"pixel_noise_sigma", &NoiseProfile::pixel_noise_sigma},
      {"max_city_lights", nullptr, &NoiseProfile::max_city_lights},
      {"city_light_amplitude_min", &NoiseProfile::city_light_amplitude_min},
      {"city_light_amplitude_max", &NoiseProfile::city_light_amplitude_max},
      {"city_light_radius_min", &NoiseProfile::city_light_radius_min},
      {"city_light_radius_max", &NoiseProfile::city_light_radius_max},
      {"max_lines", nullptr, &NoiseProfile::max_lines},
      {"line_amplitude_min", &NoiseProfile::line_amplitude_min},
      {"line_amplitude_max", &NoiseProfile::line_amplitude_max},
      {"cloud_probability", &NoiseProfile::cloud_probability},
      {"cloud_amplitude_min", &NoiseProfile::cloud_amplitude_min},
      {"cloud_amplitude_max", &NoiseProfile::cloud_amplitude_max},
      {"cloud_radius_min", &NoiseProfile::cloud_radius_min},
      {"cloud_radius_max", &NoiseProfile::cloud_radius_max},
      {"wavelength_min", &NoiseProfile::wavelength_min},
      {"wavelength_max", &NoiseProfile::wavelength_max},
      {"ripple_p2p_min", &NoiseProfile::ripple_p2p_min},
      {"ripple_p2p_max", &NoiseProfile::ripple_p2p_max},
      {"envelope_sigma_min", &NoiseProfile::envelope_sigma_min},
      {"envelope_sigma_max", &NoiseProfile::envelope_sigma_max},
      {"uniformize", nullptr, &NoiseProfile::uniformize},
  };
  return fields;
}

}  // namespace

NoiseProfile parse_noise_profile(const std::string& text) {
  NoiseProfile profile;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ValueError("noise profile line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    const auto& fields = profile_fields();
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const ProfileField& f) { return key == f.name; });
    if (it == fields.end()) throw ValueError("noise profile: unknown key '" + key + "'");
    try {
      const double v = parse_double(value, "noise profile key " + key);
      if (it->real) {
        profile.*(it->real) = v;
      } else {
        if (v < 0.0 || v != std::floor(v)) throw ValueError("noise profile: " + key + " must be a count");
        profile.*(it->count) = static_cast<std::size_t>(v);
      }
    } catch (const FormatError& e) {
      throw ValueError(e.what());
    }
  }
  profile.validate();
  return profile;
}

NoiseProfile load_noise_profile(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open noise profile " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_noise_profile(buffer.str());
}

std::string format_noise_profile(const NoiseProfile& profile) {
  std::ostringstream os;
  for (const auto& f : profile_fields()) {
    os << f.name << '=';
    if (f.real) {
      os << format_double(profile.*(f.real));
    } else {
      os << profile.*(f.count);
    }
    os << '\n';
  }
  return os.str();
}

double RippleInfo::envelope(double x, double y) const {
  return gaussian(x - centre_x, y - centre_y, envelope_sigma);
}

SynthPatch synth_patch(Rng& rng, Label label, const NoiseProfile& p) {
  p.validate();
  const std::size_t s = p.patch_size;
  const double side = static_cast<double>(s);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> field(s * s, rng.uniform(p.background_min, p.background_max));
  auto add = [&](auto&& value_at) {
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        field[y * s + x] += value_at(static_cast<double>(x), static_cast<double>(y));
      }
    }
  };

  // Smooth background: three low-frequency cosines.
  for (int term = 0; term < 3; ++term) {
    const auto cycles = static_cast<double>(p.background_max_cycles);
    const double kx = std::floor(rng.uniform(0.0, cycles + 1.0));
    const double ky = std::floor(rng.uniform(0.0, cycles + 1.0));
    const double amp = rng.uniform(0.0, p.background_wave_amplitude);
    const double phase = rng.uniform(0.0, kTwoPi);
    add([&](double x, double y) { return amp * std::cos(kTwoPi * (kx * x + ky * y) / side + phase); });
  }

  // Cloud: one large smooth blob.
  if (rng.uniform() < p.cloud_probability) {
    const double cx = rng.uniform(0.0, side);
    const double cy = rng.uniform(0.0, side);
    const double radius = rng.uniform(p.cloud_radius_min, p.cloud_radius_max);
    const double amp = rng.uniform(p.cloud_amplitude_min, p.cloud_amplitude_max);
    add([&](double x, double y) { return amp * gaussian(x - cx, y - cy, radius); });
  }

  SynthPatch out;
  if (label == Label::kGw) {
    RippleInfo r;
    r.wavelength = rng.uniform(p.wavelength_min, p.wavelength_max);
    r.theta = rng.uniform(0.0, std::numbers::pi);
    r.phase = rng.uniform(0.0, kTwoPi);
    r.amplitude = 0.5 * rng.uniform(p.ripple_p2p_min, p.ripple_p2p_max);
    r.centre_x = rng.uniform(0.25 * side, 0.75 * side);
    r.centre_y = rng.uniform(0.25 * side, 0.75 * side);
    r.envelope_sigma = rng.uniform(p.envelope_sigma_min, p.envelope_sigma_max);
    const double ct = std::cos(r.theta);
    const double st = std::sin(r.theta);
    add([&](double x, double y) {
      return r.amplitude * std::sin(kTwoPi * (x * ct + y * st) / r.wavelength + r.phase) * r.envelope(x, y);
    });
    out.ripple = r;
  }

  // City lights: small bright spots.
  const std::uint64_t lights = rng.below(p.max_city_lights + 1);
  for (std::uint64_t i = 0; i < lights; ++i) {
    const double cx = rng.uniform(0.0, side);
    const double cy = rng.uniform(0.0, side);
    const double radius = rng.uniform(p.city_light_radius_min, p.city_light_radius_max);
    const double amp = rng.uniform(p.city_light_amplitude_min, p.city_light_amplitude_max);
    const double reach = 4.0 * radius;
    for (std::size_t y = 0; y < s; ++y) {
      const double dy = static_cast<double>(y) - cy;
      if (std::abs(dy) > reach) continue;
      for (std::size_t x = 0; x < s; ++x) {
        const double dx = static_cast<double>(x) - cx;
        if (std::abs(dx) > reach) continue;
        field[y * s + x] += amp * gaussian(dx, dy, radius);
      }
    }
  }

  // Instrument lines: full-length horizontal or vertical stripes.
  const std::uint64_t lines = rng.below(p.max_lines + 1);
  for (std::uint64_t i = 0; i < lines; ++i) {
    const bool horizontal = rng.below(2) == 0;
    const std::size_t pos = rng.below(s);
    const std::size_t width = 1 + rng.below(2);
    const double amp = rng.uniform(p.line_amplitude_min, p.line_amplitude_max) * (rng.below(2) == 0 ? 1.0 : -1.0);
    for (std::size_t k = pos; k < std::min(s, pos + width); ++k) {
      for (std::size_t t = 0; t < s; ++t) field[horizontal ? k * s + t : t * s + k] += amp;
    }
  }

  Matrix pixels(s, s);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double noisy = field[i] + p.pixel_noise_sigma * rng.normal();
    pixels.values()[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
  }
  out.image = p.uniformize == 1 ? normalize_raw(pixels) : Image(std::move(pixels));
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kUnassigned: return "unassigned";
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split split_from_string(std::string_view s) {
  for (Split v : {Split::kUnassigned, Split::kTrain, Split::kVal, Split::kTest}) {
    if (to_string(v) == s) return v;
  }
  throw ValueError("unknown split '" + std::string(s) + "' (train|val|test|unassigned)");
}

std::size_t PatchDataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label; }));
}

std::size_t PatchDataset::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.split == split; }));
}

std::size_t PatchDataset::count(Label label, Split split) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label && s.split == split; }));
}

std::vector<std::size_t> PatchDataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(i);
  }
  return out;
}

PatchDataset make_dataset(std::uint64_t seed, std::size_t n_per_class, const NoiseProfile& profile) {
  if (n_per_class == 0) throw ValueError("make_dataset needs at least one patch per class");
  profile.validate();
  PatchDataset ds;
  ds.samples.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (Label label : {Label::kGw, Label::kNgw}) {
      const std::uint64_t cls = label == Label::kGw ? 0 : 1;
      Rng rng(derive_seed(seed, 2 * i + cls));
      SynthPatch patch = synth_patch(rng, label, profile);
      char name[64];
      std::snprintf(name, sizeof(name), "%s/%s_%05zu.pgm", to_string(label).data(), to_string(label).data(), i);
      Sample sample;
      sample.id = name;
      sample.image = std::move(patch.image);
      sample.label = label;
      sample.ripple = patch.ripple;
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

PatchDataset split(const PatchDataset& dataset, const SplitOptions& options, std::uint64_t seed) {
  if (options.test_count >= dataset.size()) {
    throw DataError("test_count " + std::to_string(options.test_count) + " must be smaller than the dataset (" +
                    std::to_string(dataset.size()) + " samples)");
  }
  if (!(options.train_ratio > 0.0 && options.train_ratio < 1.0)) throw ValueError("train_ratio must lie in (0, 1)");
  PatchDataset out = dataset;
  const std::size_t test_gw = (options.test_count + 1) / 2;
  const std::size_t test_ngw = options.test_count / 2;
  for (Label label : {Label::kGw, Label::kNgw}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.samples[i].label == label) members.push_back(i);
    }
    const std::size_t test_n = label == Label::kGw ? test_gw : test_ngw;
    if (test_n > members.size()) {
      throw DataError("class " + std::string(to_string(label)) + " has " + std::to_string(members.size()) +
                      " samples, fewer than its " + std::to_string(test_n) + " test slots");
    }
    Rng rng(derive_seed(seed, label == Label::kGw ? 0x7e57 : 0x7e58));
    rng.shuffle(members.begin(), members.end());
    const std::size_t remaining = members.size() - test_n;
    const auto train_n = static_cast<std::size_t>(std::llround(options.train_ratio * static_cast<double>(remaining)));
    for (std::size_t k = 0; k < members.size(); ++k) {
      Split s = Split::kVal;
      if (k < test_n) {
        s = Split::kTest;
      } else if (k < test_n + train_n) {
        s = Split::kTrain;
      }
      out.samples[members[k]].split = s;
    }
  }
  return out;
}

PatchDataset subsample(const PatchDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValueError("subsample fraction must lie in (0, 1]");
  std::vector<bool> keep(dataset.size(), false);
  std::uint64_t group_id = 0;
  for (Label label : {Label::kGw, Label::kNgw}) {
    for (Split split : {Split::kUnassigned, Split::kTrain, Split::kVal, Split::kTest}) {
      ++group_id;
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.samples[i].label == label && dataset.samples[i].split == split) members.push_back(i);
      }
      if (members.empty()) continue;
      if (split == Split::kTest) {
        for (std::size_t i : members) keep[i] = true;
        continue;
      }
      Rng rng(derive_seed(seed, group_id));
      rng.shuffle(members.begin(), members.end());
      const auto n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size()))));
      for (std::size_t k = 0; k < n; ++k) keep[members[k]] = true;
    }
  }
  PatchDataset out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (keep[i]) out.samples.push_back(dataset.samples[i]);
  }
  return out;
}

PatchDataset augment_split(const PatchDataset& dataset, Split which) {
  if (which == Split::kTest) throw ValueError("test samples are never augmented");
  PatchDataset out = dataset;
  for (const Sample& s : dataset.samples) {
    if (s.split != which || s.provenance.starts_with("augmented-from:")) continue;
    if (s.image.height() != s.image.width()) continue;
    for (AugmentedView& v : augment(s.image)) {
      if (v.view == View::kIdentity) continue;
      Sample copy;
      const std::string stem = s.id.ends_with(".pgm") ? s.id.substr(0, s.id.size() - 4) : s.id;
      copy.id = stem + "_" + std::string(to_string(v.view)) + ".pgm";
      copy.image = std::move(v.image);
      copy.label = s.label;
      copy.split = s.split;
      copy.provenance = "augmented-from:" + s.id;
      out.samples.push_back(std::move(copy));
    }
  }
  return out;
}

bool provenance_consistent(const PatchDataset& dataset) {
  std::map<std::string, Split> origin;
  for (const Sample& s : dataset.samples) origin[s.id] = s.split;
  for (const Sample& s : dataset.samples) {
    if (!s.provenance.starts_with("augmented-from:")) continue;
    const auto it = origin.find(s.provenance.substr(std::strlen("augmented-from:")));
    if (it == origin.end() || it->second != s.split || s.split == Split::kTest) return false;
  }
  return true;
}

PatchDataset prefilter_kapt(const PatchDataset& dataset, const MatrixD& kernel) {
  PatchDataset out = dataset;
  for (Sample& s : out.samples) s.image = filters::apply_filter(s.image, kernel);
  return out;
}

Tensor to_batch(const PatchDataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("cannot build an empty batch");
  const Image& first = dataset.samples.at(indices[0]).image;
  const std::size_t h = first.height();
  const std::size_t w = first.width();
  std::vector<float> values;
  values.reserve(indices.size() * h * w);
  for (std::size_t i : indices) {
    const Image& img = dataset.samples.at(i).image;
    if (img.height() != h || img.width() != w) throw ShapeError("batch mixes patch sizes");
    values.insert(values.end(), img.values().begin(), img.values().end());
  }
  return Tensor(Shape{indices.size(), 1, h, w}, std::move(values));
}

// ---------------------------------------------------------------------------
// Disk layout

void write_splits_csv(const PatchDataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "filename,split\n";
  for (const Sample& s : dataset.samples) os << s.id << ',' << to_string(s.split) << '\n';
}

void write_dataset(const PatchDataset& dataset, const std::filesystem::path& root, const WriteOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"gw", "ngw"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw FormatError("cannot create " + (root / sub).string() + ": " + ec.message());
  }
  for (const Sample& s : dataset.samples) {
    const fs::path target = root / s.id;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw FormatError("cannot create " + target.parent_path().string() + ": " + ec.message());
    write_pgm(target, s.image, options.pgm_maxval);
  }
  write_splits_csv(dataset, root / "splits.csv");
  if (options.write_generator_metadata) {
    std::ofstream os(root / "generator.csv");
    if (!os) throw FormatError("cannot write " + (root / "generator.csv").string());
    os << "filename,label,wavelength,theta,phase,amplitude,centre_x,centre_y,envelope_sigma\n";
    for (const Sample& s : dataset.samples) {
      os << s.id << ',' << to_string(s.label);
      if (s.ripple) {
        const RippleInfo& r = *s.ripple;
        for (double v : {r.wavelength, r.theta, r.phase, r.amplitude, r.centre_x, r.centre_y, r.envelope_sigma}) {
          os << ',' << format_double(v);
        }
      } else {
        os << ",,,,,,,";
      }
      os << '\n';
    }
  }
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      if (line.starts_with("filename")) continue;
    }
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

PatchDataset load_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("dataset directory " + root.string() + " does not exist");
  PatchDataset ds;
  for (const char* sub : {"gw", "ngw"}) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir)) continue;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
        names.push_back(entry.path().filename().string());
      }
    }
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
      Sample s;
      s.id = std::string(sub) + "/" + name;
      s.image = read_pgm(dir / name);
      s.label = label_from_string(sub);
      s.provenance = "real";
      ds.samples.push_back(std::move(s));
    }
  }
  if (ds.samples.empty()) throw DataError("no PGM patches under " + root.string() + "/gw or /ngw");

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < ds.size(); ++i) by_id[ds.samples[i].id] = i;
  auto lookup = [&](const std::string& id, const fs::path& file) -> Sample& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(file.string() + " mentions unknown file '" + id + "'");
    return ds.samples[it->second];
  };

  if (fs::exists(root / "labels.csv")) {
    for (const auto& row : read_csv(root / "labels.csv")) {
      if (row.size() < 2) throw FormatError("labels.csv rows need filename,label");
      lookup(row[0], root / "labels.csv").label = label_from_string(row[1]);
    }
  }
  if (fs::exists(root / "splits.csv")) {
    for (const auto& row : read_csv(root / "splits.csv")) {
      if (row.size() < 2) throw FormatError("splits.csv rows need filename,split");
      lookup(row[0], root / "splits.csv").split = split_from_string(row[1]);
    }
  }
  if (fs::exists(root / "generator.csv")) {
    for (const auto& row : read_csv(root / "generator.csv")) {
      if (row.size() < 2) throw FormatError("generator.csv rows need at least filename,label");
      Sample& s = lookup(row[0], root / "generator.csv");
      s.provenance = "synthetic";
      if (row.size() == 9 && !row[2].empty()) {
        RippleInfo r;
        const std::string ctx = "generator.csv";
        r.wavelength = parse_double(row[2], ctx);
        r.theta = parse_double(row[3], ctx);
        r.phase = parse_double(row[4], ctx);
        r.amplitude = parse_double(row[5], ctx);
        r.centre_x = parse_double(row[6], ctx);
        r.centre_y = parse_double(row[7], ctx);
        r.envelope_sigma = parse_double(row[8], ctx);
        s.ripple = r;
      }
    }
  }
  return ds;
}

}  // namespace gwavenet::data
