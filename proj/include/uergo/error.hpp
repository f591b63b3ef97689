#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uergo {

enum class ErrorKind {
  InvalidInput,
  NumericFailure,
  SingularResolvent,
  BadRadius,
  QuadratureFailure,
  NotALatticeHomomorphism,
  InternalInconsistency,
  InvalidHypothesis,
  NotRootOfUnity,
  NoSpectralGap,
  SemisimplicityViolation,
  NonDirectSum,
  TheoremViolation,
  UnknownName,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::SingularResolvent: return "singular-resolvent";
    case ErrorKind::BadRadius: return "bad-radius";
    case ErrorKind::QuadratureFailure: return "quadrature-failure";
    case ErrorKind::NotALatticeHomomorphism: return "not-a-lattice-homomorphism";
    case ErrorKind::InternalInconsistency: return "internal-inconsistency";
    case ErrorKind::InvalidHypothesis: return "invalid-hypothesis";
    case ErrorKind::NotRootOfUnity: return "not-root-of-unity";
    case ErrorKind::NoSpectralGap: return "no-spectral-gap";
    case ErrorKind::SemisimplicityViolation: return "semi-simplicity-violation";
    case ErrorKind::NonDirectSum: return "non-direct-sum";
    case ErrorKind::TheoremViolation: return "theorem-violation";
    case ErrorKind::UnknownName: return "unknown-name";
  }
  return "unknown";
}

/// Errors that contradict a proven statement for valid input. The CLI maps
/// these to exit code 2; everything else is a rejected input (exit code 1).
constexpr bool is_theorem_violation(ErrorKind kind) {
  return kind == ErrorKind::TheoremViolation || kind == ErrorKind::NotRootOfUnity ||
         kind == ErrorKind::SemisimplicityViolation || kind == ErrorKind::NonDirectSum ||
         kind == ErrorKind::InternalInconsistency;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace uergo
