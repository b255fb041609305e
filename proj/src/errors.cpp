#include "mixconv/errors.hpp"

namespace mixconv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain:
      return "domain-error";
    case ErrorCode::IntegrationStalled:
      return "integration-stalled";
    case ErrorCode::NumericalFailure:
      return "numerical-failure";
    case ErrorCode::NotBracketed:
      return "not-bracketed";
    case ErrorCode::BracketNotFound:
      return "bracket-not-found";
    case ErrorCode::InsufficientData:
      return "insufficient-data";
  }
  return "unknown";
}

}  // namespace mixconv
