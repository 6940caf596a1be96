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

#include "gwavenet/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace gwavenet {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is, const std::filesystem::path& path) {
  std::string token;
  int ch = is.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) return token;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = is.get();
  }
  if (token.empty()) throw FormatError("truncated PGM header in " + path.string());
  return token;
}

unsigned long header_number(std::istream& is, const std::filesystem::path& path) {
  const std::string t = header_token(is, path);
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad PGM header field '" + t + "' in " + path.string());
  }
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  if (header_token(is, path) != "P5") throw FormatError(path.string() + " is not a binary (P5) PGM");
  const unsigned long width = header_number(is, path);
  const unsigned long height = header_number(is, path);
  const unsigned long maxval = header_number(is, path);
  if (width == 0 || height == 0) throw FormatError(path.string() + ": zero image dimension");
  if (maxval == 0 || maxval > 65535) throw FormatError(path.string() + ": maxval must lie in [1, 65535]");
  // header_token consumed exactly one whitespace byte after maxval.
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(width * height * bytes_per);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError(path.string() + ": truncated pixel data");
  }
  Matrix pixels(height, width);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const unsigned v = bytes_per == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
    if (v > maxval) throw FormatError(path.string() + ": pixel exceeds maxval");
    pixels.values()[i] = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
  }
  return Image(std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const Image& img, unsigned maxval) {
  if (maxval != 255 && maxval != 65535) throw ValueError("PGM maxval must be 255 or 65535");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(img.values().size() * (maxval == 255 ? 1 : 2));
  for (float v : img.values()) {
    const auto q = static_cast<unsigned>(std::lround(static_cast<double>(v) * maxval));
    if (maxval == 255) {
      raw.push_back(static_cast<unsigned char>(q));
    } else {
      raw.push_back(static_cast<unsigned char>(q >> 8));
      raw.push_back(static_cast<unsigned char>(q & 0xff));
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw FormatError("failed writing " + path.string());
}

}  // namespace gwavenet
