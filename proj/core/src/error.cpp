#include "mhac/error.hpp"

namespace mhac {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kGap: return "gap error";
    case ErrorCode::kRange: return "range error";
    case ErrorCode::kCoverage: return "coverage error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kZeroVariance: return "zero variance";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kCheckpoint: return "checkpoint error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mhac
