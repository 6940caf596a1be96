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

#include "gwavenet/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace gwavenet {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> bytes = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_dim(std::size_t d) {
  if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("tensor dimension exceeds uint32");
  return static_cast<std::uint32_t>(d);
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kTensorMagic, 4);
  const Shape& s = t.shape();
  put_u32(os, checked_dim(s.n));
  put_u32(os, checked_dim(s.c));
  put_u32(os, checked_dim(s.h));
  put_u32(os, checked_dim(s.w));
  for (float v : t.values()) put_u32(os, std::bit_cast<std::uint32_t>(v));
  if (!os) throw FormatError("failed writing tensor");
}

Tensor read_tensor(std::istream& is) {
  std::array<unsigned char, kTensorHeaderBytes> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (is.gcount() != static_cast<std::streamsize>(header.size())) throw FormatError("truncated tensor header");
  if (std::memcmp(header.data(), kTensorMagic, 4) != 0) throw FormatError("bad tensor magic (expected GWT1)");
  Shape s{get_u32(&header[4]), get_u32(&header[8]), get_u32(&header[12]), get_u32(&header[16])};
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) throw FormatError("tensor header has a zero dimension");
  const std::size_t count = s.size();
  if (count > (std::size_t{1} << 32)) throw FormatError("tensor header describes an implausibly large tensor");
  std::vector<unsigned char> raw(count * 4);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("truncated tensor data: expected " + std::to_string(count) + " floats for " + s.str());
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(&raw[4 * i]));
  try {
    return Tensor(s, std::move(values));
  } catch (const NumericError& e) {
    throw FormatError(std::string("tensor data: ") + e.what());
  }
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace gwavenet
