#pragma once

#include <stdexcept>
#include <string>

namespace ssflab {

// Every failure mode a caller is expected to branch on gets its own kind.
// Message text is for humans; tests dispatch on the kind.
enum class ErrorKind {
    SingularToTolerance,
    NotHermitian,
    NotPSD,
    NotContraction,
    NotDissipative,
    NotUnitary,
    KernelAtMinusOne,
    PoleAtInput,
    ExhaustedAttempts,
    KernelNotPresent,
    DimensionMismatch,
    StepTooSmall,
    ContourTooTight,
    WindingNonzero,
    InsufficientDecay,
    OrderViolation,
    EigenvalueAtPlusMinusOne,
    ConfigInvalid,
    ParseError,
    InvalidArgument,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::SingularToTolerance:      return "SingularToTolerance";
        case ErrorKind::NotHermitian:             return "NotHermitian";
        case ErrorKind::NotPSD:                   return "NotPSD";
        case ErrorKind::NotContraction:           return "NotContraction";
        case ErrorKind::NotDissipative:           return "NotDissipative";
        case ErrorKind::NotUnitary:               return "NotUnitary";
        case ErrorKind::KernelAtMinusOne:         return "KernelAtMinusOne";
        case ErrorKind::PoleAtInput:              return "PoleAtInput";
        case ErrorKind::ExhaustedAttempts:        return "ExhaustedAttempts";
        case ErrorKind::KernelNotPresent:         return "KernelNotPresent";
        case ErrorKind::DimensionMismatch:        return "DimensionMismatch";
        case ErrorKind::StepTooSmall:             return "StepTooSmall";
        case ErrorKind::ContourTooTight:          return "ContourTooTight";
        case ErrorKind::WindingNonzero:           return "WindingNonzero";
        case ErrorKind::InsufficientDecay:        return "InsufficientDecay";
        case ErrorKind::OrderViolation:           return "OrderViolation";
        case ErrorKind::EigenvalueAtPlusMinusOne: return "EigenvalueAtPlusMinusOne";
        case ErrorKind::ConfigInvalid:            return "ConfigInvalid";
        case ErrorKind::ParseError:               return "ParseError";
        case ErrorKind::InvalidArgument:          return "InvalidArgument";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
          kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace ssflab
