#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kw {

/// Failure categories raised by the library. Precondition and input
/// violations are thrown; solver outcomes (non-convergence, no upper
/// solution found) are reported through SolveStatus instead.
enum class ErrorCode {
  // graph_core
  EmptySpec,
  DisconnectedGraph,
  NonpositiveLength,
  SelfLoop,
  DanglingEndpoint,
  DuplicateId,
  ResolutionTooCoarse,
  ContinuityMismatch,
  NonfiniteValue,
  NotMeanZero,
  SeminormExceedsDelta,
  GridMismatch,
  // assembly
  NonpositiveShift,
  IncompatibleRHS,
  LinearSolveFailure,
  // solvers
  MarginTooLarge,
  IntegralNotNegative,
  HNotNonpositive,
  OrderingViolated,
  NotAdmissible,
  FeasibilityFailure,
  InvalidArgument,
  // verify
  KirchhoffDefect,
  // io
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace kw
