#pragma once

#include <stdexcept>
#include <string>

namespace dopo {

enum class ErrorKind {
  InvalidParameter,
  CriticalPointSingularity,
  NoAboveBranch,
  SingularDenominator,
  BranchCountViolation,
  NoSolution,
  NoOnsetFound,
  UnphysicalSolution,
  UnstableSolution,
  Numerical,
  Stiffness,
  DegenerateMarginal,
  EmptySupport,
  GridMismatch,
};

const char* to_string(ErrorKind kind);

// Physics errors are properties of the model at the requested point
// (singularities, missing branches). Everything else is a numerical or
// usage failure.
bool is_physics_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dopo
