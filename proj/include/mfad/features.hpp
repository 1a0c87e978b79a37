#pragma once

// Per-video feature data model and the on-disk container format.
//
// Layout of a dataset directory:
//   <root>/meta.json
//   <root>/<split>/<video_id>.<kind>.mff
//   <root>/<split>/<video_id>.labels        (test videos)
//
// .mff (little-endian): "MFF1", u8 kind tag, u32 D, u64 record count, then
// per record: u32 frame_index, u32 block_length, i32 object_id (-1 absent),
// D x f32 vector.
// .labels: u32 frame_count, frame_count x u8 (0 normal, 1 abnormal).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfad {

enum class FeatureKind : std::uint8_t { Pose = 0, Velocity = 1, ImageEncoding = 2, VideoEncoding = 3 };

inline constexpr std::size_t kNumKinds = 4;
inline constexpr std::array<FeatureKind, kNumKinds> kAllKinds = {
    FeatureKind::Pose, FeatureKind::Velocity, FeatureKind::ImageEncoding, FeatureKind::VideoEncoding};

inline constexpr std::uint32_t kVelocityDim = 2;
inline constexpr std::uint32_t kDefaultBlockLength = 16;

constexpr std::size_t index_of(FeatureKind k) noexcept { return static_cast<std::size_t>(k); }

// "pose", "velocity", "image", "video": used in file names and meta.json.
std::string_view kind_name(FeatureKind k) noexcept;
// "P", "V", "IE", "VE": used in ablation tables and configs.
std::string_view kind_short_name(FeatureKind k) noexcept;
std::optional<FeatureKind> kind_from_name(std::string_view name) noexcept;

struct FeatureRecord {
    std::uint32_t frame_index = 0;
    std::uint32_t block_length = 1;
    std::optional<std::uint32_t> object_id;
    std::vector<float> vector;

    bool operator==(const FeatureRecord&) const = default;
};

struct VideoFeatureSet {
    std::string video_id;
    std::uint32_t frame_count = 0;
    std::array<std::vector<FeatureRecord>, kNumKinds> records;
    std::optional<std::vector<std::uint8_t>> ground_truth;

    std::vector<FeatureRecord>& of(FeatureKind k) { return records[index_of(k)]; }
    const std::vector<FeatureRecord>& of(FeatureKind k) const { return records[index_of(k)]; }

    bool operator==(const VideoFeatureSet&) const = default;
};

enum class Split { Train, Test };

std::string_view split_name(Split s) noexcept;

struct Dataset {
    std::string name;
    std::vector<VideoFeatureSet> train;
    std::vector<VideoFeatureSet> test;
    // Feature dimension per kind; nullopt when the kind is absent.
    std::array<std::optional<std::uint32_t>, kNumKinds> dims;

    const std::vector<VideoFeatureSet>& videos(Split s) const { return s == Split::Train ? train : test; }
    bool has_kind(FeatureKind k) const { return dims[index_of(k)].has_value(); }

    bool operator==(const Dataset&) const = default;
};

struct FrameRef {
    std::size_t video;  // index into Dataset::videos(split)
    std::uint32_t frame;

    bool operator==(const FrameRef&) const = default;
};

// Checks every data-model invariant. Throws mfad::Error naming the video,
// kind and record index of the first violation. `origin` prefixes messages
// (usually the dataset root).
void validate_dataset(const Dataset& dataset, std::string_view origin = "<memory>");

Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

// Canonical frame ordering: videos in meta order, frames ascending. Row i of
// every downstream score matrix refers to frames_of(...)[i].
std::vector<FrameRef> frames_of(const Dataset& dataset, Split split);

// Row offset of each video's first frame in frames_of order, plus a final
// sentinel equal to the total frame count.
std::vector<std::size_t> video_offsets(const Dataset& dataset, Split split);

// Content hash over every field that affects scoring.
std::uint64_t dataset_hash(const Dataset& dataset);

}  // namespace mfad
