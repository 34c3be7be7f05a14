#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mhac {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kEmptyInput,
  kGap,
  kRange,
  kCoverage,
  kConfig,
  kInsufficientData,
  kZeroVariance,
  kShapeMismatch,
  kNonFinite,
  kIo,
  kCheckpoint,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code so
// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mhac
