#pragma once

#include <span>

namespace mfad {

// Train-set range of raw density scores for one feature kind.
struct CalibrationStats {
    double train_min = 0.0;
    double train_max = 0.0;

    bool operator==(const CalibrationStats&) const = default;
};

// Throws EmptyInput on an empty span, InvalidRecord on non-finite scores.
CalibrationStats fit_calibration(std::span<const double> train_scores);

// Min-max rescaling clamped to [0, 1]. A degenerate range maps scores at or
// below the single train value to 0 and everything above it to 1.
double apply_calibration(const CalibrationStats& stats, double score) noexcept;

}  // namespace mfad
