// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace histcolor {

enum class ErrorCode {
  kInputRange,
  kContract,
  kConfig,
  kFormat,
  kIngestion,
  kUsage,
  kDivergence,
  kIncompatible,
  kEstimator,
  kIo,
};

/// Stable upper-case identifier printed by the CLI, e.g. "CONFIG_ERROR".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Process exit status used by the CLI for each error class.
int error_exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace histcolor
