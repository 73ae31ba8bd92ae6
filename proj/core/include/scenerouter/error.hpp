#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scenerouter {

enum class ErrorCode {
  kInvalidArgument,
  kFileNotFound,
  kParseError,
  kEmptyDataset,
  kInvalidWindowParams,
  kDegenerateSegment,
  kTooFewSamples,
  kEmptyBank,
  kEmptyHoldout,
  kNoEvidence,
  kLengthMismatch,
  kAllZeroWeights,
  kUnknownVariant,
  kDuplicateExpertName,
  kVersionMismatch,
  kArtifactNotFound,
  kHashMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above.
// `line` is set for parse errors (1-based), 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

// Process exit status for the command-line driver: 2 for data problems,
// 3 for artifact/version problems.
int exit_status(ErrorCode code);

}  // namespace scenerouter
