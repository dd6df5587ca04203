#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crd {

enum class ErrorCode {
    InvalidArgument,
    NonStochastic,
    NegativeEntry,
    EmptyAlphabet,
    ShapeMismatch,
    ZeroProbabilityClass,
    InactiveCriterion,
    NonConvergence,
    Infeasible,
    AlphabetTooLarge,
    InfeasibleOnGrid,
    NotPerfectClassification,
    ZeroOrNegative,
    Truncated,
    RateViolated,
    MalformedStream,
    LengthMismatch,
    NotAPartition,
    UnknownExample,
};

inline const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonStochastic: return "NonStochastic";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::EmptyAlphabet: return "EmptyAlphabet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroProbabilityClass: return "ZeroProbabilityClass";
    case ErrorCode::InactiveCriterion: return "InactiveCriterion";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::AlphabetTooLarge: return "AlphabetTooLarge";
    case ErrorCode::InfeasibleOnGrid: return "InfeasibleOnGrid";
    case ErrorCode::NotPerfectClassification: return "NotPerfectClassification";
    case ErrorCode::ZeroOrNegative: return "ZeroOrNegative";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::RateViolated: return "RateViolated";
    case ErrorCode::MalformedStream: return "MalformedStream";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotAPartition: return "NotAPartition";
    case ErrorCode::UnknownExample: return "UnknownExample";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
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

/// Raised when no channel meets every constraint. `violating` lists the
/// criterion positions whose individual lower bound already exceeds the
/// budget; it is empty when only the joint system is infeasible.
class InfeasibleError : public Error {
public:
    InfeasibleError(std::vector<std::size_t> violating, const std::string& what)
        : Error(ErrorCode::Infeasible, what), violating_(std::move(violating))
    {
    }

    const std::vector<std::size_t>& violating() const noexcept { return violating_; }

private:
    std::vector<std::size_t> violating_;
};

} // namespace crd
