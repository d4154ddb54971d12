// Copyright 2026 The SHAPr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapr {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kLengthMismatch,
  kOutOfRange,
  kDivergence,
  kUndefined,
  kCapExceeded,
  kIo,
  kBadMagic,
  kTruncated,
  kDtypeMismatch,
  kBadFormat,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kLengthMismatch: return "length mismatch";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kCapExceeded: return "cap exceeded";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kDtypeMismatch: return "dtype mismatch";
    case ErrorCode::kBadFormat: return "bad format";
  }
  return "unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI and callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace shapr
