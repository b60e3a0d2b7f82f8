#include "dopo/error.hpp"

namespace dopo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::CriticalPointSingularity: return "critical-point-singularity";
    case ErrorKind::NoAboveBranch: return "no-above-branch";
    case ErrorKind::SingularDenominator: return "singular-denominator";
    case ErrorKind::BranchCountViolation: return "branch-count-violation";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::NoOnsetFound: return "no-onset-found";
    case ErrorKind::UnphysicalSolution: return "unphysical-solution";
    case ErrorKind::UnstableSolution: return "unstable-solution";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Stiffness: return "stiffness";
    case ErrorKind::DegenerateMarginal: return "degenerate-marginal";
    case ErrorKind::EmptySupport: return "empty-support";
    case ErrorKind::GridMismatch: return "grid-mismatch";
  }
  return "unknown";
}

bool is_physics_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CriticalPointSingularity:
    case ErrorKind::NoAboveBranch:
    case ErrorKind::SingularDenominator:
    case ErrorKind::BranchCountViolation:
    case ErrorKind::NoSolution:
    case ErrorKind::NoOnsetFound:
    case ErrorKind::UnphysicalSolution:
    case ErrorKind::UnstableSolution:
    case ErrorKind::DegenerateMarginal:
    case ErrorKind::EmptySupport:
      return true;
    default:
      return false;
  }
}

}  // namespace dopo
