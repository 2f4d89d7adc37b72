#include "mtqsar/error.hpp"

namespace mtqsar {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicateCompound: return "DuplicateCompound";
        case ErrorCode::InsufficientRows: return "InsufficientRows";
        case ErrorCode::AssayTooSmall: return "AssayTooSmall";
        case ErrorCode::UnknownAssay: return "UnknownAssay";
        case ErrorCode::UnknownCompound: return "UnknownCompound";
        case ErrorCode::UndefinedGain: return "UndefinedGain";
        case ErrorCode::BadFeatureCount: return "BadFeatureCount";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::StaleTrace: return "StaleTrace";
        case ErrorCode::NumericalDivergence: return "NumericalDivergence";
        case ErrorCode::BadEpoch: return "BadEpoch";
        case ErrorCode::EmptyAssay: return "EmptyAssay";
        case ErrorCode::UndefinedAUC: return "UndefinedAUC";
        case ErrorCode::NoValidRuns: return "NoValidRuns";
        case ErrorCode::BadVariance: return "BadVariance";
        case ErrorCode::GPError: return "GPError";
    }
    return "Unknown";
}

}  // namespace mtqsar
