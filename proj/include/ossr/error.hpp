#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ossr {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptImage,
  InvalidWindow,
  DegenerateContour,
  EmptyInput,
  TooFewPoints,
  EmptyRegion,
  KTooLarge,
  ShapeMismatch,
  InvalidMargin,
  InsufficientClasses,
  NonConvergence,
  EmptyDirectory,
  PlacementOverflow,
  InvalidConfig,
  UsageError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and tests can assert on the exact kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ossr
