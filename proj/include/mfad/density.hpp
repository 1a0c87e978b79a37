#pragma once

// Per-kind density models, their train-set calibration, and aggregation of
// record-level scores into one calibrated score per test frame and kind.
//
// Velocity uses a GMM (negative log-likelihood); pose, image and video
// encodings use kNN (distance to the k-th neighbour). Raw record scores
// covering a frame are aggregated first, then calibrated with the train
// frames' min/max. Frames without a covering record score 0.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "mfad/calibration.hpp"
#include "mfad/features.hpp"
#include "mfad/gmm.hpp"
#include "mfad/knn.hpp"

namespace mfad {

enum class Aggregation : std::uint8_t { Max = 0, Mean = 1 };

using KindMask = std::array<bool, kNumKinds>;

inline constexpr KindMask kAllKindsMask = {true, true, true, true};

struct DensityOptions {
    std::array<std::uint32_t, kNumKinds> knn_k = {1, 1, 1, 1};
    GmmFitOptions gmm;
    Aggregation aggregation = Aggregation::Max;
    std::size_t workers = 1;
};

using DensityModel = std::variant<GmmModel, KnnIndex>;

struct KindModel {
    DensityModel model;
    CalibrationStats calibration;

    bool operator==(const KindModel&) const = default;
};

struct DensityModels {
    std::array<std::optional<KindModel>, kNumKinds> kinds;
    Aggregation aggregation = Aggregation::Max;

    bool has(FeatureKind k) const { return kinds[index_of(k)].has_value(); }
    bool operator==(const DensityModels&) const = default;
};

// Calibrated per-frame scores of one split, rows in frames_of order.
struct FrameScores {
    std::vector<FrameRef> frames;
    std::vector<std::size_t> video_offsets;  // see features.hpp video_offsets()
    std::vector<std::string> video_ids;
    std::vector<std::uint8_t> labels;        // empty for splits without ground truth
    std::array<std::vector<double>, kNumKinds> values;  // empty for kinds not scored
    KindMask present{};

    std::size_t rows() const noexcept { return frames.size(); }
};

// Raw density score of one record under a fitted model.
double record_score(const DensityModel& model, std::span<const float> vector);

// Fits a model per requested kind on the train split and its calibration on
// the train frames' aggregated raw scores. kNN train scores are computed
// leave-one-out so a record never matches itself. Kinds absent from the
// dataset are skipped.
DensityModels fit_density(const Dataset& dataset, const KindMask& kinds, const DensityOptions& options);

// Raw (uncalibrated) aggregated score per frame of `split` for one kind;
// nullopt marks frames with no covering record.
std::vector<std::optional<double>> raw_frame_scores(const Dataset& dataset, Split split, FeatureKind kind,
                                                    const DensityModel& model, Aggregation aggregation,
                                                    bool leave_one_out = false, std::size_t workers = 1);

// Scores the test split for every kind in `kinds`. Throws ModelKindMissing
// when a requested kind has no fitted model or is absent from the dataset.
FrameScores score_dataset(const Dataset& dataset, const DensityModels& models, const KindMask& kinds,
                          std::size_t workers = 1);

// Binary sidecar ("MFM1", little-endian) so fitting and scoring can run as
// separate invocations. Round-trips bit-exactly.
void save_models(const DensityModels& models, const std::filesystem::path& path);
DensityModels load_models(const std::filesystem::path& path);

// CSV form of FrameScores: video_id,frame_index,label,<kind columns...>
void save_frame_scores(const FrameScores& scores, const std::filesystem::path& path);
FrameScores load_frame_scores(const std::filesystem::path& path);

}  // namespace mfad
