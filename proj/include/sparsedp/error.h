// Copyright 2026 The sparsedp Authors
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

#ifndef SPARSEDP_ERROR_H_
#define SPARSEDP_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsedp {

enum class ErrorCode {
  kInvalidParameter,
  kBudgetOutOfRange,
  // A hypothesis of a privacy theorem does not hold; the accountant refuses
  // to report a guarantee.
  kAssumptionViolated,
  kEmptySelection,
  kDimensionMismatch,
  kInput,
  kIo,
  kInvariantViolation,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter:
      return "invalid parameter";
    case ErrorCode::kBudgetOutOfRange:
      return "budget out of range";
    case ErrorCode::kAssumptionViolated:
      return "assumption violated";
    case ErrorCode::kEmptySelection:
      return "empty selection";
    case ErrorCode::kDimensionMismatch:
      return "dimension mismatch";
    case ErrorCode::kInput:
      return "input error";
    case ErrorCode::kIo:
      return "i/o error";
    case ErrorCode::kInvariantViolation:
      return "internal invariant violation";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " +
                           message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for errors raised by privacy accounting: the guarantee cannot be
  // certified for the requested parameters.
  bool is_accounting_refusal() const noexcept {
    return code_ == ErrorCode::kAssumptionViolated ||
           code_ == ErrorCode::kBudgetOutOfRange;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code,
                    const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace sparsedp

#endif  // SPARSEDP_ERROR_H_
