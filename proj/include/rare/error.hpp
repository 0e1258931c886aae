#pragma once

#include <stdexcept>
#include <string>

namespace rare {

enum class ErrorCode {
  kInvalidInput,
  kInvalidShape,
  kInvalidConfig,
  kDegenerateBox,
  kBackendUnavailable,
  kEmptyObjectSet,
  kSchemaValidation,
  kMissingData,
  kInvalidAnnotation,
  kUndefinedRecall,
  kBenchmarkAborted,
  kGenerationError,
  kIo,
};

const char* to_string(ErrorCode code);

/// Every module reports failures through this type; the CLI turns it into a
/// machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rare
