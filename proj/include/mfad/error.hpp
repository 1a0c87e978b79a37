#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfad {

enum class ErrorCode {
    MissingFile,
    MagicMismatch,
    DimensionMismatch,
    UnsortedRecords,
    LabelLengthMismatch,
    InvalidRecord,
    InvalidLabels,
    IoError,
    InvalidConfig,
    TooFewSamples,
    DegenerateComponent,
    EmptyIndex,
    EmptyInput,
    ModelKindMissing,
    InvalidAlpha,
    NoSamples,
    ShapeMismatch,
    SingleClassError,
    ClassMissing,
    InsufficientVideos,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as mfad::Error; the code is stable, the
// message names the offending file/record/stage where there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mfad
