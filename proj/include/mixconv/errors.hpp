#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixconv {

enum class ErrorCode {
  Domain,
  IntegrationStalled,
  NumericalFailure,
  NotBracketed,
  BracketNotFound,
  InsufficientData,
};

std::string_view to_string(ErrorCode code);

/// Base of every error raised by the library. The code is stable and is
/// what the command-line front end maps to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mixconv
