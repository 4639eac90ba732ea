// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tdg {

// Mirrors tdg_status in tdg.h; values must stay in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kBadMagic = 3,
  kUnsupportedVersion = 4,
  kTruncated = 5,
  kInvariant = 6,
  kMissingKeyframe = 7,
  kDimensionMismatch = 8,
  kSingleClass = 9,
  kNumeric = 10,
  kState = 11,
  kConfig = 12,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tdg
