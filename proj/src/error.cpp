#include "mfad/error.hpp"

namespace mfad {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MagicMismatch: return "MagicMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnsortedRecords: return "UnsortedRecords";
        case ErrorCode::LabelLengthMismatch: return "LabelLengthMismatch";
        case ErrorCode::InvalidRecord: return "InvalidRecord";
        case ErrorCode::InvalidLabels: return "InvalidLabels";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::DegenerateComponent: return "DegenerateComponent";
        case ErrorCode::EmptyIndex: return "EmptyIndex";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::ModelKindMissing: return "ModelKindMissing";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::NoSamples: return "NoSamples";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::SingleClassError: return "SingleClassError";
        case ErrorCode::ClassMissing: return "ClassMissing";
        case ErrorCode::InsufficientVideos: return "InsufficientVideos";
    }
    return "Unknown";
}

}  // namespace mfad
