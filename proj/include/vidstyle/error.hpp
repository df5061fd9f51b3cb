// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vidstyle {

/// Base class for every recoverable failure raised by the library. The CLI
/// maps these to exit code 3 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported bytes in an NPY, .flo or PNG file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. The message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to an external backend process.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace vidstyle
