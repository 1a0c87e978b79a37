#include "mfad/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfad/error.hpp"

namespace mfad {

CalibrationStats fit_calibration(std::span<const double> train_scores) {
    if (train_scores.empty()) throw Error(ErrorCode::EmptyInput, "calibration needs at least one train score");
    CalibrationStats s{train_scores.front(), train_scores.front()};
    for (std::size_t i = 0; i < train_scores.size(); ++i) {
        const double v = train_scores[i];
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidRecord, "non-finite train score at " + std::to_string(i));
        s.train_min = std::min(s.train_min, v);
        s.train_max = std::max(s.train_max, v);
    }
    return s;
}

double apply_calibration(const CalibrationStats& stats, double score) noexcept {
    const double range = stats.train_max - stats.train_min;
    if (!(range > 0.0)) return score <= stats.train_min ? 0.0 : 1.0;
    return std::clamp((score - stats.train_min) / range, 0.0, 1.0);
}

}  // namespace mfad
