#pragma once

// Synthetic feature datasets with a known normal/abnormal structure, so the
// scoring pipeline can be exercised end to end without any video encoder.

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mfad/features.hpp"

namespace mfad {

struct MixtureComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> variance;  // diagonal covariance
};

struct SynthKindSpec {
    std::uint32_t dim = 0;
    std::vector<MixtureComponent> mixture;
    std::vector<double> anomaly_shift;  // added to abnormal-frame samples
};

struct SynthConfig {
    std::string name = "synthetic";
    std::uint32_t n_train_videos = 1;
    std::uint32_t n_test_videos = 1;
    std::uint32_t frames_per_video = 1;
    std::uint32_t objects_per_frame = 1;
    std::uint32_t block_length = kDefaultBlockLength;
    std::uint64_t seed = 0;
    std::array<std::optional<SynthKindSpec>, kNumKinds> kinds;
    // Per test video, half-open [start, end) frame ranges.
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> anomaly_segments;
};

// Throws Error(InvalidConfig) describing the first problem found.
void validate(const SynthConfig& config);

Dataset generate(const SynthConfig& config);

// JSON form. Scalars are accepted for mean/variance/anomaly_shift and are
// broadcast to the kind's dimension. Unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json synth_config_to_json(const SynthConfig& config);

// Ready-made configuration: all four kinds, two-component normal mixtures
// with unit variances, `shift_sigmas` standard deviations of shift on every
// coordinate of every kind, two block-aligned anomaly segments per test video.
SynthConfig standard_synth_config(double shift_sigmas, std::uint64_t seed = 7);

}  // namespace mfad
