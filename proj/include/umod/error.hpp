// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace umod {

enum class ErrorKind {
  Config,   // invalid configuration or usage
  Io,       // unreadable/unwritable files and directories
  Data,     // malformed or inconsistent data
  Numeric,  // non-finite values during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace umod
