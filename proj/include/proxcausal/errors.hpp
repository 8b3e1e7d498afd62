#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proxcausal {

enum class ErrorCode {
  // data_model
  MissingColumn,
  NonFiniteValue,
  DuplicateSubjectTime,
  RoleConflict,
  RaggedColumn,
  ZeroMassCell,
  InvalidLaw,
  // linear_kernel
  DimensionMismatch,
  AllZeroWeights,
  SingleClassResponse,
  // synthetic_dgp
  InvalidSpec,
  DegenerateProbability,
  // bridge_solvers
  WeakProxy,
  NoSolution,
  // estimators
  InvalidLayout,
  NonBinaryColumn,
  OptimizerNotConverged,
  EmptyCandidates,
  // inference
  TooManyFailedReplicates,
  InvalidArgument,
  // cli
  ConfigSchemaError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateSubjectTime: return "DuplicateSubjectTime";
    case ErrorCode::RoleConflict: return "RoleConflict";
    case ErrorCode::RaggedColumn: return "RaggedColumn";
    case ErrorCode::ZeroMassCell: return "ZeroMassCell";
    case ErrorCode::InvalidLaw: return "InvalidLaw";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::SingleClassResponse: return "SingleClassResponse";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::WeakProxy: return "WeakProxy";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::NonBinaryColumn: return "NonBinaryColumn";
    case ErrorCode::OptimizerNotConverged: return "OptimizerNotConverged";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigSchemaError: return "ConfigSchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. Carries a machine
/// readable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One problem found while validating a dataset.
struct Violation {
  ErrorCode code;
  std::string column;  // empty when not column specific
  long row = -1;       // -1 when not row specific
  std::string detail;
};

/// Raised by validate_dataset; lists every violation rather than the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(violations.empty() ? ErrorCode::InvalidArgument : violations.front().code,
              summarize(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

  bool has(ErrorCode code) const {
    for (const auto& v : violations_)
      if (v.code == code) return true;
    return false;
  }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out = std::to_string(vs.size()) + " violation(s)";
    for (const auto& v : vs) {
      out += "; ";
      out += to_string(v.code);
      if (!v.column.empty()) out += " column '" + v.column + "'";
      if (v.row >= 0) out += " row " + std::to_string(v.row);
      if (!v.detail.empty()) out += " (" + v.detail + ")";
    }
    return out;
  }

  std::vector<Violation> violations_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace proxcausal
