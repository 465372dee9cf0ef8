#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tidyfit {

enum class ErrorKind {
  Parse,
  Schema,
  Argument,
  Type,
  Unsupported,
  Combine,
  Domain,
  SingularDesign,
  InsufficientData,
  Convergence,
  SingularGradient,
  BadStart,
  Internal,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the category so
/// callers (the CLI in particular) can map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures raised while fitting a model, as opposed to bad input.
  bool is_fit_failure() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace tidyfit
