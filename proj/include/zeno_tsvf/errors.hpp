#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zeno_tsvf {

enum class ErrorCode {
  kInvalidParameter,
  kContractViolation,
  kImpossiblePostSelection,
  kUndefinedAbl,
  kCapacityExceeded,
  kPrecisionLoss,
};

// Stable machine-readable names, used verbatim in CLI error JSON.
inline constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kContractViolation: return "contract-violation";
    case ErrorCode::kImpossiblePostSelection: return "impossible-post-selection";
    case ErrorCode::kUndefinedAbl: return "undefined-abl";
    case ErrorCode::kCapacityExceeded: return "capacity-exceeded";
    case ErrorCode::kPrecisionLoss: return "precision-loss";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zeno_tsvf
