#ifndef CHECKERFIELD_ERROR_HPP
#define CHECKERFIELD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace checkerfield {

enum class ErrorCode {
  InvalidArgument,
  PointOutsideDomain,
  NotInImage,
  Overflow,
  NotAdmissible,
  NoAdmissiblePsi,
  ConditionViolated,
  MalformedTrace,
  OnSingularEdge,
  BoxTouchesBoundary,
  AllUnderflow,
  DegenerateHull,
  NoSeparation,
  PeelStalled,
  SingularSystem,
  InconsistentF3,
  BadRadii,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::NotInImage: return "NotInImage";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::NoAdmissiblePsi: return "NoAdmissiblePsi";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::MalformedTrace: return "MalformedTrace";
    case ErrorCode::OnSingularEdge: return "OnSingularEdge";
    case ErrorCode::BoxTouchesBoundary: return "BoxTouchesBoundary";
    case ErrorCode::AllUnderflow: return "AllUnderflow";
    case ErrorCode::DegenerateHull: return "DegenerateHull";
    case ErrorCode::NoSeparation: return "NoSeparation";
    case ErrorCode::PeelStalled: return "PeelStalled";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InconsistentF3: return "InconsistentF3";
    case ErrorCode::BadRadii: return "BadRadii";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// front ends can map it to a machine-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace checkerfield

#endif  // CHECKERFIELD_ERROR_HPP
