// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace anapr {

// Base for every error raised by the library. The module tag is prepended
// to the message so that CLI diagnostics say where a failure came from.
class Error : public std::runtime_error {
public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(module) {}
  const std::string& module() const { return module_; }

private:
  std::string module_;
};

// Malformed JSON or a missing/ill-typed field.
class ParseError : public Error {
public:
  using Error::Error;
};

// Well-formed input that breaks a data-model invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// An action the placement environment refuses (mask-false, wrong device).
class IllegalActionError : public Error {
public:
  using Error::Error;
};

// Caller broke an operation precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

}  // namespace anapr
