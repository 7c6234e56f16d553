#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clickstat {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    NegativeConstantTerm,
    OrderTooLow,
    ZeroAmplitude,
    SqueezingOutOfRange,
    NonHermitianResult,
    ZeroMeanPhotonNumber,
    InvalidResponse,
    NormalizationViolation,
    NegativeProbability,
    PrecisionExhausted,
    OrderExceedsDiodes,
    InsufficientOrder,
    DegenerateMean,
    DegenerateBank,
    LengthMismatch,
    EmptyHistogram,
    DivergentPhotonSum,
};

std::string_view to_string(ErrorCode code) noexcept;

// True for failures of a computed result (as opposed to bad input).
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NegativeConstantTerm: return "NegativeConstantTerm";
    case ErrorCode::OrderTooLow: return "OrderTooLow";
    case ErrorCode::ZeroAmplitude: return "ZeroAmplitude";
    case ErrorCode::SqueezingOutOfRange: return "SqueezingOutOfRange";
    case ErrorCode::NonHermitianResult: return "NonHermitianResult";
    case ErrorCode::ZeroMeanPhotonNumber: return "ZeroMeanPhotonNumber";
    case ErrorCode::InvalidResponse: return "InvalidResponse";
    case ErrorCode::NormalizationViolation: return "NormalizationViolation";
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::OrderExceedsDiodes: return "OrderExceedsDiodes";
    case ErrorCode::InsufficientOrder: return "InsufficientOrder";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::DegenerateBank: return "DegenerateBank";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::DivergentPhotonSum: return "DivergentPhotonSum";
    }
    return "Unknown";
}

inline bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NonHermitianResult:
    case ErrorCode::NormalizationViolation:
    case ErrorCode::NegativeProbability:
    case ErrorCode::PrecisionExhausted:
    case ErrorCode::OrderTooLow:
    case ErrorCode::DivergentPhotonSum:
        return true;
    default:
        return false;
    }
}

} // namespace clickstat
