// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace puflab {

/// Root of all errors thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A parameter or input is outside its documented range.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Challenge/response width does not match the device.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent configuration between cooperating components.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A protocol operation was invoked in a state that does not allow it.
class ProtocolStateError : public Error {
  public:
    using Error::Error;
};

/// Authenticated decryption failed or a sealed blob is malformed.
class TamperError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    IoError(const std::string &path, const std::string &what)
        : Error(path + ": " + what), path_(path) {}
    const std::string &path() const { return path_; }

  private:
    std::string path_;
};

} // namespace puflab
