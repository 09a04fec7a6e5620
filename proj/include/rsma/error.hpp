// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rsma {

/// Failure categories. The CLI maps each one to a distinct exit status.
enum class ErrorCategory {
  parameter,   // caller supplied an out-of-range value
  contract,    // pre/post-condition violated (shapes, semi-unitarity, power)
  numerical,   // factorization failed, non-finite result
  degenerate,  // input is valid but rank-deficient or all-zero
  io,
  not_implemented,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error(ErrorCategory::parameter, w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ErrorCategory::contract, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& w) : Error(ErrorCategory::degenerate, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCategory::io, w) {}
};
struct NotImplementedError : Error {
  explicit NotImplementedError(const std::string& w) : Error(ErrorCategory::not_implemented, w) {}
};

const char* to_string(ErrorCategory c) noexcept;

}  // namespace rsma
