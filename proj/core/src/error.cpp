// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/error.hpp"

#include <sstream>

#include "histcolor/tensor.hpp"

namespace histcolor {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInputRange: return "INPUT_RANGE_ERROR";
    case ErrorCode::kContract: return "CONTRACT_ERROR";
    case ErrorCode::kConfig: return "CONFIG_ERROR";
    case ErrorCode::kFormat: return "FORMAT_ERROR";
    case ErrorCode::kIngestion: return "INGESTION_ERROR";
    case ErrorCode::kUsage: return "USAGE_ERROR";
    case ErrorCode::kDivergence: return "TRAINING_DIVERGENCE";
    case ErrorCode::kIncompatible: return "INCOMPATIBLE_CHECKPOINT";
    case ErrorCode::kEstimator: return "ESTIMATOR_ERROR";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN_ERROR";
}

int error_exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage: return 2;
    case ErrorCode::kConfig: return 3;
    case ErrorCode::kIngestion:
    case ErrorCode::kIo: return 4;
    case ErrorCode::kFormat: return 5;
    case ErrorCode::kIncompatible: return 6;
    case ErrorCode::kDivergence: return 7;
    default: return 1;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    require(d >= 0, ErrorCode::kContract, "negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace histcolor
