/* Copyright 2026 The mtctc Authors. All Rights Reserved.

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

namespace mtctc {

enum class ErrorKind {
  kParse,
  kOutOfRange,
  kInvalidArgument,
  kInfeasible,
  kIo,
  kChecksum,
  kVersion,
  kConfigMismatch,
  kDivergence,
};

const char* ErrorKindName(ErrorKind kind);

// Every failure surfaced by the library carries a kind so callers can branch
// on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const { return kind_; }
  // The message without the kind prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kOutOfRange: return "out of range";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kChecksum: return "checksum mismatch";
    case ErrorKind::kVersion: return "version mismatch";
    case ErrorKind::kConfigMismatch: return "config mismatch";
    case ErrorKind::kDivergence: return "divergence";
  }
  return "error";
}

}  // namespace mtctc
