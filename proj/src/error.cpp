#include "rare/error.hpp"

namespace rare {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kInvalidShape: return "invalid-shape";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kDegenerateBox: return "degenerate-box";
    case ErrorCode::kBackendUnavailable: return "backend-unavailable";
    case ErrorCode::kEmptyObjectSet: return "empty-object-set";
    case ErrorCode::kSchemaValidation: return "schema-validation";
    case ErrorCode::kMissingData: return "missing-data";
    case ErrorCode::kInvalidAnnotation: return "invalid-annotation";
    case ErrorCode::kUndefinedRecall: return "undefined-recall";
    case ErrorCode::kBenchmarkAborted: return "benchmark-aborted";
    case ErrorCode::kGenerationError: return "generation-error";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace rare
