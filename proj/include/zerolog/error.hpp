#pragma once

#include <stdexcept>
#include <string>

namespace zerolog {

enum class ErrorKind {
  Input,           // malformed or missing user input
  Config,          // invalid configuration / parameter ranges
  Format,          // file content does not follow its declared format
  Numeric,         // non-finite values during training or evaluation
  DegenerateLine,  // a log line reduced to zero tokens
  EmptyInput,      // an operation received an empty sequence / set
  Join,            // label join produced nothing
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the gradient path; `where` names the layer that produced the
/// first non-finite component.
class NumericError : public Error {
 public:
  NumericError(std::string where, const std::string& what)
      : Error(ErrorKind::Numeric, what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace zerolog
