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

#include <stdexcept>
#include <string>

namespace gwavenet {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/matrix dimensions that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain (even kernel size, bad fraction...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced or supplied.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable files: tensors, checkpoints, PGM images, CSVs.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Datasets that cannot satisfy a request (empty split, too few samples).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace gwavenet
